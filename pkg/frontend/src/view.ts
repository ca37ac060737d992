import { Mode } from './protocol.js';
import { danceLabel, MISSION_TARGET, ViewState } from './state.js';

// Every renderer returns an HTML string for a state snapshot. No DOM reads,
// no timers, no sockets: identical state renders to identical markup, which
// is what the conformance snapshots pin down.

export interface HiddenLayoutObject {
  id: string;
  x: number;
  y: number;
}

/** Optional scene geometry, loaded from the same story file the server uses. */
export interface RenderContext {
  layout?: HiddenLayoutObject[];
}

const MODE_LABELS: { mode: Mode; label: string }[] = [
  { mode: 'toques', label: 'Toques' },
  { mode: 'historia_avatar', label: 'História: Avatar' },
  { mode: 'historia_surpresa', label: 'História: Surpresa' },
];

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderModeMenu(state: ViewState): string {
  const buttons = MODE_LABELS.map(({ mode, label }) => {
    const active = state.mode === mode ? ' active' : '';
    return `<button class="mode-btn${active}" data-mode="${mode}">${esc(label)}</button>`;
  });
  return `<nav class="mode-menu">${buttons.join('')}</nav>`;
}

export function renderScoreBar(state: ViewState): string {
  const pct = Math.min(100, Math.round((state.score / MISSION_TARGET) * 100));
  return (
    `<div class="score-bar" data-score="${state.score}">` +
    `<div class="score-fill" style="width:${pct}%"></div>` +
    `<div class="target-marker" data-target="${MISSION_TARGET}"></div>` +
    `<span class="score-text">${state.score} / ${MISSION_TARGET}</span>` +
    `</div>`
  );
}

export function renderRoster(state: ViewState): string {
  const slots = state.roster.map((entry) => {
    const you = entry.id === state.playerId ? ' <em>(you)</em>' : '';
    return (
      `<li class="slot" data-player="${esc(entry.id)}" style="--slot-color:${esc(entry.color)}">` +
      `${esc(entry.id)}${you}</li>`
    );
  });
  return `<ul class="roster">${slots.join('')}</ul>`;
}

function animationLabel(state: ViewState): string {
  const anim = state.animation;
  switch (anim.kind) {
    case 'idle':
      return 'standing by';
    case 'dance':
      return danceLabel(anim.name);
    case 'small_chaos':
      return `${danceLabel(anim.chosen)} (surprise pick)`;
    case 'chaos':
      return `Chaos dance: ${anim.track}`;
  }
}

function facingAngle(state: ViewState): number | null {
  if (state.facing === null) {
    return null;
  }
  const idx = state.roster.findIndex((r) => r.id === state.facing);
  if (idx < 0) {
    return null;
  }
  const n = state.roster.length;
  if (n <= 1) {
    return 0;
  }
  // roster slots fan out left to right; rotate the arrow across 120 degrees
  return Math.round(-60 + (120 * idx) / (n - 1));
}

export function renderAvatarPanel(state: ViewState): string {
  const label = animationLabel(state);
  const angle = facingAngle(state);
  const arrow =
    angle === null
      ? ''
      : `<div class="facing-arrow" data-facing="${esc(state.facing ?? '')}"` +
        ` style="transform:rotate(${angle}deg)">&#11014;</div>`;
  return (
    `<div class="avatar-panel">` +
    `<div class="avatar-figure" data-animation="${esc(state.animation.kind)}">&#128378;</div>` +
    `<p class="dance-name">${esc(label)}</p>` +
    arrow +
    `</div>`
  );
}

function renderHiddenBoard(snap: Record<string, unknown>, ctx: RenderContext): string {
  const phase = String(snap.state);
  const found = Array.isArray(snap.objects_found) ? snap.objects_found.map(String) : [];
  const total = Number(snap.objects_total ?? 0);
  if (phase === 'marker_placement') {
    return (
      `<div class="hidden-board" data-phase="marker_placement">` +
      `<p>Drag the picture marker into place, then release.</p>` +
      `<div class="marker-scene"><div class="marker-handle">&#128204;</div></div>` +
      `<label class="marker-rot-label">tilt <input type="range" class="marker-rot" min="0" max="359" value="0"></label>` +
      `</div>`
    );
  }
  const progress = `<p class="hidden-progress">${found.length} / ${total} found</p>`;
  if (phase === 'chest_open') {
    return `<div class="hidden-board" data-phase="chest_open"><p>The chest is open!</p>${progress}</div>`;
  }
  const spots = (ctx.layout ?? []).map((obj) => {
    const done = found.includes(obj.id) ? ' found' : '';
    return (
      `<button class="object-spot${done}" data-object="${esc(obj.id)}"` +
      ` style="left:${obj.x}px;top:${obj.y}px">${esc(obj.id)}</button>`
    );
  });
  const scene =
    spots.length > 0
      ? `<div class="object-scene">${spots.join('')}</div>`
      : `<input class="object-id" placeholder="object name"><button class="object-find">Found it</button>`;
  const key =
    phase === 'key_found'
      ? `<button class="use-key">&#128273; Open the chest</button>`
      : '';
  return `<div class="hidden-board" data-phase="${esc(phase)}">${progress}${scene}${key}</div>`;
}

function renderQuizBoard(snap: Record<string, unknown>): string {
  if (snap.state === 'finished') {
    return (
      `<div class="quiz-board" data-phase="finished">` +
      `<p>Quiz done: ${Number(snap.correct_count)} / ${Number(snap.questions_total)} right.</p></div>`
    );
  }
  return (
    `<div class="quiz-board" data-phase="in_progress">` +
    `<p class="quiz-progress">Question ${Number(snap.question_index) + 1} of ${Number(snap.questions_total)}</p>` +
    `<p class="quiz-question">${esc(String(snap.question ?? ''))}</p>` +
    `<input class="quiz-answer" placeholder="type your answer">` +
    `<button class="quiz-submit">Answer</button>` +
    `</div>`
  );
}

function renderWordBoard(snap: Record<string, unknown>): string {
  const mask = String(snap.mask ?? '');
  const spaced = esc(mask.split('').join(' '));
  const wrong = Number(snap.wrong_attempts ?? 0);
  const guessed = Array.isArray(snap.guessed) ? snap.guessed.map(String) : [];
  const status = String(snap.state);
  let footer = '';
  if (status === 'won') {
    footer = `<p class="word-outcome">Solved: ${esc(String(snap.secret ?? ''))}</p>`;
  } else if (status === 'lost') {
    footer = `<p class="word-outcome">Out of attempts, it was ${esc(String(snap.secret ?? ''))}</p>`;
  } else {
    footer = `<input class="word-guess" placeholder="letter or word"><button class="word-submit">Guess</button>`;
  }
  return (
    `<div class="word-board" data-phase="${esc(status)}">` +
    `<p class="word-mask">${spaced}</p>` +
    `<p class="word-misses">${wrong} / 7 misses</p>` +
    `<p class="word-guessed">tried: ${esc(guessed.join(' ') || 'nothing yet')}</p>` +
    footer +
    `</div>`
  );
}

export function renderMinigameRail(state: ViewState, ctx: RenderContext): string {
  if (state.mode !== 'historia_surpresa') {
    return ''; // minigames belong to the surprise story mode only
  }
  const buttons =
    `<button class="minigame-btn" data-kind="hidden_objects">Hidden objects</button>` +
    `<button class="minigame-btn" data-kind="quiz">Quiz</button>` +
    `<button class="minigame-btn" data-kind="word">Word game</button>`;
  let board = '';
  const snap = state.minigame;
  if (snap !== null) {
    const kind = String(snap.kind);
    if (kind === 'hidden_objects') {
      board = renderHiddenBoard(snap, ctx);
    } else if (kind === 'quiz') {
      board = renderQuizBoard(snap);
    } else {
      board = renderWordBoard(snap);
    }
  }
  return `<aside class="minigame-rail">${buttons}${board}</aside>`;
}

export function renderToasts(state: ViewState): string {
  const items = state.toasts.map(
    (toast) => `<li class="toast" style="--tint:${esc(toast.color)}">${esc(toast.text)}</li>`
  );
  return `<ul class="toasts">${items.join('')}</ul>`;
}

export function renderIdentityBadge(state: ViewState): string {
  if (state.playerId === null || state.color === null) {
    return `<div class="identity-badge pending">connecting&hellip;</div>`;
  }
  return (
    `<div class="identity-badge">` +
    `<span class="swatch" style="background:${esc(state.color)}"></span>` +
    `<span class="who">${esc(state.playerId)}</span>` +
    `</div>`
  );
}

export function renderMissionOverlay(state: ViewState): string {
  if (!state.missionComplete) {
    return '';
  }
  const total = state.finalTotal ?? state.score;
  return (
    `<div class="mission-overlay"><div class="mission-card">` +
    `<h1>Mission complete!</h1><p>${total} points together</p>` +
    `</div></div>`
  );
}

export function renderWarning(state: ViewState): string {
  if (state.warning === null) {
    return '';
  }
  return `<div class="warning-banner">${esc(state.warning)}</div>`;
}

/** The whole page body for one state; wired to the DOM by main.ts. */
export function renderApp(state: ViewState, ctx: RenderContext = {}): string {
  return (
    `<main class="stage">` +
    renderModeMenu(state) +
    renderScoreBar(state) +
    `<section class="arena gesture-surface">` +
    renderRoster(state) +
    renderAvatarPanel(state) +
    `</section>` +
    renderMinigameRail(state, ctx) +
    renderToasts(state) +
    renderIdentityBadge(state) +
    renderWarning(state) +
    renderMissionOverlay(state) +
    `</main>`
  );
}
