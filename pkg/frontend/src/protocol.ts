// Wire types for the room server: newline-delimited JSON envelopes, one
// message per line, same payloads over raw TCP and WebSocket text frames.

export type Mode = 'toques' | 'historia_avatar' | 'historia_surpresa';
export type DanceToken = 'macarena' | 'samba' | 'move_it' | 'twist';
export type SwipeDirection = 'up' | 'down' | 'left' | 'right';

export type GestureEvent =
  | { kind: 'tap_burst'; taps: number }
  | { kind: 'swipe'; direction: SwipeDirection }
  | { kind: 'raw_taps'; timestamps_ms: number[] };

export type Outcome =
  | { kind: 'dance'; name: DanceToken }
  | { kind: 'small_chaos'; chosen: DanceToken }
  | { kind: 'chaos'; track: string };

export type Animation = { kind: 'idle' } | Outcome;

export type Payload =
  | { tag: 'join'; display_name?: string }
  | { tag: 'leave' }
  | { tag: 'gesture'; gesture: GestureEvent }
  | { tag: 'select_mode'; mode: Mode }
  | { tag: 'start_minigame'; kind: string }
  | { tag: 'minigame_input'; input: Record<string, unknown> }
  | { tag: 'ping' }
  | { tag: 'pong' }
  | { tag: 'welcome'; player_id: string; color: string }
  | { tag: 'player_joined'; player_id: string; color: string }
  | { tag: 'player_left'; player_id: string }
  | { tag: 'mode_changed'; mode: Mode; actor_color: string | null }
  | { tag: 'action_broadcast'; actor_color: string; outcome: Outcome; points: number }
  | { tag: 'avatar_update'; animation: Animation; facing: string | null }
  | { tag: 'score_update'; total: number }
  | { tag: 'mission_complete'; final_total: number }
  | { tag: 'minigame_update'; snapshot: Record<string, unknown> }
  | { tag: 'notification'; actor_color: string; text: string }
  | { tag: 'error_reply'; code: string; text: string };

export interface Envelope {
  v: 1;
  seq: number;
  room_id: string;
  sender: string;
  sent_at: number;
  payload: Payload;
}

const SERVER_TAGS = new Set([
  'welcome',
  'player_joined',
  'player_left',
  'mode_changed',
  'action_broadcast',
  'avatar_update',
  'score_update',
  'mission_complete',
  'minigame_update',
  'notification',
  'error_reply',
]);

const CLIENT_TAGS = new Set([
  'join',
  'leave',
  'gesture',
  'select_mode',
  'start_minigame',
  'minigame_input',
  'ping',
  'pong',
]);

/** Wrap a client payload in an envelope; clients always send seq 0. */
export function clientEnvelope(roomId: string, payload: Payload, sentAt: number): Envelope {
  return { v: 1, seq: 0, room_id: roomId, sender: '', sent_at: sentAt, payload };
}

/** One JSON line, no trailing newline; the socket layer adds framing. */
export function encodeEnvelope(env: Envelope): string {
  return JSON.stringify(env);
}

function isInt(x: unknown): x is number {
  return typeof x === 'number' && Number.isInteger(x);
}

/**
 * Parse one line from the server. Throws on anything that is not a
 * well-formed envelope; unknown extra fields are ignored.
 */
export function decodeEnvelope(line: string): Envelope {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new Error('malformed json line');
  }
  if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
    throw new Error('envelope must be a json object');
  }
  const env = obj as Record<string, unknown>;
  if (env.v !== 1) throw new Error('unsupported protocol version');
  if (!isInt(env.seq) || (env.seq as number) < 0) throw new Error('bad seq');
  if (typeof env.room_id !== 'string' || env.room_id === '') throw new Error('bad room_id');
  if (typeof env.sender !== 'string') throw new Error('bad sender');
  if (!isInt(env.sent_at) || (env.sent_at as number) < 0) throw new Error('bad sent_at');
  const payload = env.payload as Record<string, unknown> | undefined;
  if (typeof payload !== 'object' || payload === null) throw new Error('missing payload');
  const tag = payload.tag;
  if (typeof tag !== 'string' || !(SERVER_TAGS.has(tag) || CLIENT_TAGS.has(tag))) {
    throw new Error(`unknown payload tag ${JSON.stringify(tag)}`);
  }
  return {
    v: 1,
    seq: env.seq as number,
    room_id: env.room_id,
    sender: env.sender,
    sent_at: env.sent_at as number,
    payload: payload as unknown as Payload,
  };
}

export function isServerPayload(payload: Payload): boolean {
  return SERVER_TAGS.has(payload.tag);
}
