import { Animation, Envelope, Mode, Outcome } from './protocol.js';

// The client never computes score or avatar state on its own; this module
// only folds what the server said into a plain view model. Rendering reads
// the model, user input goes straight out over the wire.

export interface RosterEntry {
  id: string;
  color: string;
}

export interface Toast {
  color: string;
  text: string;
}

export const MAX_TOASTS = 4;
export const MISSION_TARGET = 20;

export interface ViewState {
  playerId: string | null;
  color: string | null;
  mode: Mode;
  roster: RosterEntry[];
  score: number;
  missionComplete: boolean;
  finalTotal: number | null;
  animation: Animation;
  facing: string | null;
  minigame: Record<string, unknown> | null;
  toasts: Toast[];
  lastSeq: number;
  needResync: boolean;
  warning: string | null;
}

export function initialState(): ViewState {
  return {
    playerId: null,
    color: null,
    mode: 'toques',
    roster: [],
    score: 0,
    missionComplete: false,
    finalTotal: null,
    animation: { kind: 'idle' },
    facing: null,
    minigame: null,
    toasts: [],
    lastSeq: 0,
    needResync: false,
    warning: null,
  };
}

function pushToast(toasts: Toast[], color: string, text: string): Toast[] {
  return [...toasts, { color, text }].slice(-MAX_TOASTS);
}

/** Set a local warning banner (dropped offline input, socket trouble). */
export function withWarning(state: ViewState, text: string | null): ViewState {
  return { ...state, warning: text };
}

/**
 * Fold one server envelope into the view. Pure: returns a new state.
 *
 * Replies and catch-up arrive with seq 0 and always apply. Broadcasts
 * carry the room's sequence numbers; a hole in that stream flips
 * `needResync` so the socket layer can reconnect for a fresh snapshot.
 */
export function applyServer(state: ViewState, env: Envelope): ViewState {
  if (env.seq > 0) {
    if (state.lastSeq > 0 && env.seq <= state.lastSeq) {
      return state; // stale duplicate
    }
    if (state.lastSeq > 0 && env.seq > state.lastSeq + 1) {
      return { ...state, needResync: true };
    }
    state = { ...state, lastSeq: env.seq };
  } else {
    state = { ...state };
  }

  const p = env.payload;
  switch (p.tag) {
    case 'welcome':
      // fresh identity: the server replays everything we need right after,
      // and the next broadcast seq becomes the new baseline
      return { ...initialState(), playerId: p.player_id, color: p.color };
    case 'player_joined':
      if (state.roster.some((r) => r.id === p.player_id)) {
        return state;
      }
      return { ...state, roster: [...state.roster, { id: p.player_id, color: p.color }] };
    case 'player_left': {
      const roster = state.roster.filter((r) => r.id !== p.player_id);
      const facing = state.facing === p.player_id ? null : state.facing;
      return { ...state, roster, facing };
    }
    case 'mode_changed':
      // any mode switch abandons a running minigame server-side
      return { ...state, mode: p.mode, minigame: null };
    case 'action_broadcast':
      return { ...state, toasts: pushToast(state.toasts, p.actor_color, actionLabel(p.outcome)) };
    case 'avatar_update':
      return { ...state, animation: p.animation, facing: p.facing };
    case 'score_update':
      return { ...state, score: p.total };
    case 'mission_complete':
      return { ...state, missionComplete: true, finalTotal: p.final_total };
    case 'minigame_update':
      return { ...state, minigame: p.snapshot };
    case 'notification':
      return { ...state, toasts: pushToast(state.toasts, p.actor_color, p.text) };
    case 'error_reply':
      return { ...state, warning: `${p.code}: ${p.text}` };
    default:
      return state; // client-side tags echoed in logs; nothing to fold
  }
}

const DANCE_LABELS: Record<string, string> = {
  macarena: 'Macarena',
  samba: 'Samba',
  move_it: 'Move it',
  twist: 'Twist',
};

export function danceLabel(token: string): string {
  return DANCE_LABELS[token] ?? token;
}

function actionLabel(outcome: Outcome): string {
  switch (outcome.kind) {
    case 'chaos':
      return 'Chaos!';
    case 'small_chaos':
      return `Small chaos: ${danceLabel(outcome.chosen)}!`;
    case 'dance':
      return `${danceLabel(outcome.name)}!`;
  }
}
