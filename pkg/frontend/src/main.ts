import { GestureEncoder, OutboundQueue } from './gesture.js';
import { clientEnvelope, decodeEnvelope, encodeEnvelope, Envelope, Payload } from './protocol.js';
import { applyServer, initialState, ViewState, withWarning } from './state.js';
import { HiddenLayoutObject, RenderContext, renderApp } from './view.js';

// Browser bootstrap: one socket, one render loop, no game logic. Everything
// the user does becomes a wire message; everything on screen comes from the
// server's broadcast stream.

const ROOM_ID = new URLSearchParams(location.search).get('room') ?? 'lobby';
const WS_URL = `ws://${location.host}/ws`;
const TICK_MS = 100;
const RECONNECT_MS = 1000;

let state: ViewState = initialState();
let socket: WebSocket | null = null;
let ctx: RenderContext = {};
const encoder = new GestureEncoder();
const queue = new OutboundQueue();

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app container');
}

function setState(next: ViewState): void {
  if (next === state) {
    return;
  }
  state = next;
  root!.innerHTML = renderApp(state, ctx);
  if (state.needResync && socket !== null) {
    // a hole in the broadcast stream; drop the socket and join fresh
    socket.close();
  }
}

function send(payload: Payload): void {
  const env = clientEnvelope(ROOM_ID, payload, Math.round(performance.now()));
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(encodeEnvelope(env));
    return;
  }
  queue.push(env, performance.now());
}

function handleEnvelope(env: Envelope): void {
  if (env.payload.tag === 'ping') {
    send({ tag: 'pong' });
    return;
  }
  setState(applyServer(state, env));
}

function connect(): void {
  const ws = new WebSocket(WS_URL);
  socket = ws;
  ws.onopen = () => {
    setState(withWarning(initialState(), null));
    ws.send(encodeEnvelope(clientEnvelope(ROOM_ID, { tag: 'join' }, Math.round(performance.now()))));
    const { send: held, dropped } = queue.drain(performance.now());
    for (const env of held) {
      ws.send(encodeEnvelope(env));
    }
    if (dropped > 0) {
      setState(withWarning(state, `${dropped} queued input(s) expired while offline`));
    }
  };
  ws.onmessage = (event) => {
    for (const line of String(event.data).split('\n')) {
      if (line.trim() === '') {
        continue;
      }
      try {
        handleEnvelope(decodeEnvelope(line));
      } catch {
        // one bad line should not take the view down
      }
    }
  };
  ws.onclose = () => {
    if (socket === ws) {
      socket = null;
      setState(withWarning(state, 'offline, reconnecting'));
      setTimeout(connect, RECONNECT_MS);
    }
  };
}

// ---------------------------------------------------------------------------
// input wiring

function sendGestures(events: ReturnType<GestureEncoder['feed']>): void {
  for (const gesture of events) {
    send({ tag: 'gesture', gesture });
  }
}

function onSurfacePointer(kind: 'down' | 'up', event: PointerEvent): void {
  const target = event.target as HTMLElement;
  if (target.closest('button, input, .minigame-rail, .mode-menu')) {
    return; // controls are not part of the tap surface
  }
  sendGestures(encoder.feed({ kind, x: event.clientX, y: event.clientY, t: event.timeStamp }));
}

function markerPose(handle: HTMLElement, scene: HTMLElement): { x: number; y: number } {
  const h = handle.getBoundingClientRect();
  const s = scene.getBoundingClientRect();
  return { x: Math.round(h.left - s.left), y: Math.round(h.top - s.top) };
}

function onClick(event: MouseEvent): void {
  const target = (event.target as HTMLElement).closest('button') as HTMLButtonElement | null;
  if (!target) {
    return;
  }
  if (target.dataset.mode) {
    send({ tag: 'select_mode', mode: target.dataset.mode as never });
  } else if (target.dataset.kind) {
    send({ tag: 'start_minigame', kind: target.dataset.kind });
  } else if (target.dataset.object) {
    send({ tag: 'minigame_input', input: { op: 'find_object', object_id: target.dataset.object } });
  } else if (target.classList.contains('use-key')) {
    send({ tag: 'minigame_input', input: { op: 'use_key' } });
  } else if (target.classList.contains('quiz-submit')) {
    const box = root!.querySelector<HTMLInputElement>('.quiz-answer');
    if (box && box.value.trim() !== '') {
      send({ tag: 'minigame_input', input: { op: 'answer', transcript: box.value } });
      box.value = '';
    }
  } else if (target.classList.contains('word-submit')) {
    const box = root!.querySelector<HTMLInputElement>('.word-guess');
    if (box && box.value.trim() !== '') {
      send({ tag: 'minigame_input', input: { op: 'guess', text: box.value } });
      box.value = '';
    }
  } else if (target.classList.contains('object-find')) {
    const box = root!.querySelector<HTMLInputElement>('.object-id');
    if (box && box.value.trim() !== '') {
      send({ tag: 'minigame_input', input: { op: 'find_object', object_id: box.value.trim() } });
      box.value = '';
    }
  }
}

let dragging: HTMLElement | null = null;

function onMarkerPointer(event: PointerEvent): void {
  const target = event.target as HTMLElement;
  if (event.type === 'pointerdown' && target.classList.contains('marker-handle')) {
    dragging = target;
    target.setPointerCapture(event.pointerId);
    event.stopPropagation();
  } else if (event.type === 'pointermove' && dragging) {
    dragging.style.left = `${event.offsetX}px`;
    dragging.style.top = `${event.offsetY}px`;
  } else if (event.type === 'pointerup' && dragging) {
    const scene = dragging.closest('.marker-scene') as HTMLElement | null;
    if (scene) {
      const pose = markerPose(dragging, scene);
      const rot = root!.querySelector<HTMLInputElement>('.marker-rot');
      send({
        tag: 'minigame_input',
        input: { op: 'place_marker', x: pose.x, y: pose.y, rot_deg: rot ? Number(rot.value) : 0 },
      });
    }
    dragging = null;
    event.stopPropagation();
  }
}

async function loadLayout(): Promise<void> {
  try {
    const res = await fetch('./story.json');
    if (!res.ok) {
      return;
    }
    const cfg = (await res.json()) as { hidden_objects?: { objects?: HiddenLayoutObject[] } };
    const objects = cfg.hidden_objects?.objects;
    if (Array.isArray(objects)) {
      ctx = { layout: objects.map((o) => ({ id: o.id, x: o.x, y: o.y })) };
    }
  } catch {
    // no layout file next to the page; boards fall back to typed input
  }
}

root.innerHTML = renderApp(state, ctx);
root.addEventListener('pointerdown', (e) => {
  onMarkerPointer(e);
  if (!dragging) {
    onSurfacePointer('down', e);
  }
});
root.addEventListener('pointermove', onMarkerPointer);
root.addEventListener('pointerup', (e) => {
  if (dragging) {
    onMarkerPointer(e);
  } else {
    onSurfacePointer('up', e);
  }
});
root.addEventListener('click', onClick);

setInterval(() => {
  sendGestures(encoder.tick(performance.now()));
  const dropped = queue.expire(performance.now());
  if (dropped > 0) {
    setState(withWarning(state, `${dropped} queued input(s) expired while offline`));
  }
}, TICK_MS);

loadLayout().then(connect);
