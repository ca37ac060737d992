import { readFileSync } from 'node:fs';
import { Ajv } from 'ajv';
import { describe, expect, test } from 'vitest';

import { clientEnvelope, decodeEnvelope, encodeEnvelope, Envelope } from '../src/protocol.js';

const schema = JSON.parse(
  readFileSync(new URL('../../protocol/schema.json', import.meta.url), 'utf8')
);
const validate = new Ajv().compile(schema);

const streamLines = readFileSync(
  new URL('../fixtures/broadcast_stream.ndjson', import.meta.url),
  'utf8'
)
  .split('\n')
  .filter((line) => line !== '');

describe('envelope encode and decode', () => {
  test('a client gesture round-trips', () => {
    const env = clientEnvelope('lobby', { tag: 'gesture', gesture: { kind: 'tap_burst', taps: 3 } }, 42);
    expect(decodeEnvelope(encodeEnvelope(env))).toEqual(env);
  });

  test('client envelopes are schema-valid', () => {
    const samples: Envelope[] = [
      clientEnvelope('lobby', { tag: 'join' }, 1),
      clientEnvelope('lobby', { tag: 'select_mode', mode: 'historia_surpresa' }, 2),
      clientEnvelope('lobby', { tag: 'start_minigame', kind: 'quiz' }, 3),
      clientEnvelope('lobby', { tag: 'minigame_input', input: { op: 'answer', transcript: 'a chave' } }, 4),
      clientEnvelope('lobby', { tag: 'gesture', gesture: { kind: 'swipe', direction: 'left' } }, 5),
      clientEnvelope('lobby', { tag: 'pong' }, 6),
      clientEnvelope('lobby', { tag: 'leave' }, 7),
    ];
    for (const env of samples) {
      const ok = validate(JSON.parse(encodeEnvelope(env)));
      expect(ok, JSON.stringify(validate.errors)).toBe(true);
    }
  });

  test('rejects the stuff a server would never send', () => {
    expect(() => decodeEnvelope('{nope')).toThrow(/malformed/);
    expect(() => decodeEnvelope('[1,2]')).toThrow(/object/);
    expect(() => decodeEnvelope(JSON.stringify({ v: 2, seq: 0, room_id: 'r', sender: '', sent_at: 0, payload: { tag: 'ping' } }))).toThrow(/version/);
    expect(() => decodeEnvelope(JSON.stringify({ v: 1, seq: 0, room_id: 'r', sender: '', sent_at: 0, payload: { tag: 'warp' } }))).toThrow(/unknown payload tag/);
    expect(() => decodeEnvelope(JSON.stringify({ v: 1, seq: -1, room_id: 'r', sender: '', sent_at: 0, payload: { tag: 'ping' } }))).toThrow(/seq/);
    expect(() => decodeEnvelope(JSON.stringify({ v: 1, seq: 0, room_id: '', sender: '', sent_at: 0, payload: { tag: 'ping' } }))).toThrow(/room_id/);
    expect(() => decodeEnvelope(JSON.stringify({ v: 1, seq: 0, room_id: 'r', sender: '', sent_at: 0 }))).toThrow(/payload/);
  });

  test('unknown extra fields are tolerated', () => {
    const env = decodeEnvelope(
      JSON.stringify({
        v: 1,
        seq: 9,
        room_id: 'r',
        sender: 'server',
        sent_at: 5,
        trace_id: 'abc',
        payload: { tag: 'score_update', total: 7 },
      })
    );
    expect(env.seq).toBe(9);
    expect(env.payload).toMatchObject({ tag: 'score_update', total: 7 });
  });
});

describe('recorded server stream', () => {
  test('every line decodes and validates against the shared schema', () => {
    expect(streamLines.length).toBeGreaterThan(50);
    for (const line of streamLines) {
      const env = decodeEnvelope(line);
      expect(env.sender).toBe('server');
      const ok = validate(JSON.parse(line));
      expect(ok, JSON.stringify(validate.errors)).toBe(true);
    }
  });

  test('broadcast seq numbers are a contiguous run', () => {
    const seqs = streamLines.map((l) => decodeEnvelope(l).seq).filter((s) => s > 0);
    for (let i = 1; i < seqs.length; i++) {
      expect(seqs[i]).toBe(seqs[i - 1] + 1);
    }
  });
});
