import { Envelope, GestureEvent, SwipeDirection } from './protocol.js';

// Tuning shared with the server: a burst breaks only when the gap between
// consecutive taps exceeds the window, so the client may group taps itself
// and the server-side classifier will agree on the same timestamps.
export const BURST_WINDOW_MS = 400;
export const SWIPE_MIN_TRAVEL_PX = 40;
export const SWIPE_MAX_DURATION_MS = 300;
export const OFFLINE_QUEUE_MS = 5000;

/** A pointer contact, already reduced to what gesture detection needs. */
export interface PointerSample {
  kind: 'down' | 'up';
  x: number;
  y: number;
  t: number; // ms, same clock for every sample fed to one encoder
}

interface PressState {
  x: number;
  y: number;
  t: number;
}

function swipeDirection(dx: number, dy: number): SwipeDirection {
  // Dominant axis wins; on a perfect diagonal we call it horizontal.
  if (Math.abs(dx) >= Math.abs(dy)) {
    return dx > 0 ? 'right' : 'left';
  }
  return dy > 0 ? 'down' : 'up';
}

/**
 * Turns a single-pointer event stream into wire gesture events.
 *
 * Taps are timestamped at the press and grouped into bursts; a burst is
 * emitted once the window has passed without another tap, or immediately
 * when a swipe interrupts it. A release only counts as a swipe when the
 * pointer travelled far enough fast enough; everything else is a tap.
 */
export class GestureEncoder {
  private pendingTaps: number[] = [];
  private press: PressState | null = null;

  feed(sample: PointerSample): GestureEvent[] {
    if (sample.kind === 'down') {
      this.press = { x: sample.x, y: sample.y, t: sample.t };
      return [];
    }
    const press = this.press;
    this.press = null;
    if (press === null) {
      return []; // stray release, e.g. pointer entered mid-drag
    }
    const dx = sample.x - press.x;
    const dy = sample.y - press.y;
    const travel = Math.hypot(dx, dy);
    const duration = sample.t - press.t;
    if (travel > SWIPE_MIN_TRAVEL_PX && duration <= SWIPE_MAX_DURATION_MS) {
      const out = this.flush();
      out.push({ kind: 'swipe', direction: swipeDirection(dx, dy) });
      return out;
    }
    return this.addTap(press.t);
  }

  /** Emit the pending burst if the window has expired by `now`. */
  tick(now: number): GestureEvent[] {
    const last = this.pendingTaps[this.pendingTaps.length - 1];
    if (last !== undefined && now - last > BURST_WINDOW_MS) {
      return this.flush();
    }
    return [];
  }

  /** Force-close the pending burst, e.g. before leaving the surface. */
  flush(): GestureEvent[] {
    if (this.pendingTaps.length === 0) {
      return [];
    }
    const burst: GestureEvent = { kind: 'tap_burst', taps: this.pendingTaps.length };
    this.pendingTaps = [];
    return [burst];
  }

  private addTap(t: number): GestureEvent[] {
    const last = this.pendingTaps[this.pendingTaps.length - 1];
    const out: GestureEvent[] = [];
    if (last !== undefined && t - last > BURST_WINDOW_MS) {
      out.push(...this.flush());
    }
    this.pendingTaps.push(t);
    return out;
  }
}

/**
 * Holds messages while the socket is down. Anything older than
 * OFFLINE_QUEUE_MS at drain time is dropped and counted so the UI can
 * warn that input was lost.
 */
export class OutboundQueue {
  private entries: { env: Envelope; at: number }[] = [];

  push(env: Envelope, now: number): void {
    this.entries.push({ env, at: now });
  }

  get size(): number {
    return this.entries.length;
  }

  /** Drop entries past their shelf life without touching the rest. */
  expire(now: number): number {
    const keep = this.entries.filter((e) => now - e.at <= OFFLINE_QUEUE_MS);
    const dropped = this.entries.length - keep.length;
    this.entries = keep;
    return dropped;
  }

  drain(now: number): { send: Envelope[]; dropped: number } {
    const send: Envelope[] = [];
    let dropped = 0;
    for (const entry of this.entries) {
      if (now - entry.at > OFFLINE_QUEUE_MS) {
        dropped += 1;
      } else {
        send.push(entry.env);
      }
    }
    this.entries = [];
    return { send, dropped };
  }
}
