/** Incremental codecs for the two stream framings the server speaks:
 * newline-delimited JSON and 4-byte big-endian length-prefixed JSON. */

import type { Envelope } from './types.js';

type Bytes = Uint8Array<ArrayBufferLike>;

export interface Framing {
  encode(msg: Envelope): Bytes;
  /** Feed a chunk; returns every complete message it closed. */
  feed(chunk: Bytes): Envelope[];
}

const encoder = new TextEncoder();
const decoder = new TextDecoder();

function concat(a: Bytes, b: Bytes): Bytes {
  const out = new Uint8Array(a.length + b.length);
  out.set(a, 0);
  out.set(b, a.length);
  return out;
}

export class NewlineFraming implements Framing {
  private buf: Bytes = new Uint8Array(0);

  encode(msg: Envelope): Bytes {
    return encoder.encode(JSON.stringify(msg) + '\n');
  }

  feed(chunk: Bytes): Envelope[] {
    this.buf = concat(this.buf, chunk);
    const out: Envelope[] = [];
    let start = 0;
    for (let i = 0; i < this.buf.length; i++) {
      if (this.buf[i] === 0x0a) {
        const line = this.buf.subarray(start, i);
        start = i + 1;
        const text = decoder.decode(line).trim();
        if (text.length > 0) {
          out.push(JSON.parse(text) as Envelope);
        }
      }
    }
    this.buf = this.buf.slice(start);
    return out;
  }
}

export class LengthPrefixFraming implements Framing {
  private buf: Bytes = new Uint8Array(0);

  encode(msg: Envelope): Bytes {
    const body = encoder.encode(JSON.stringify(msg));
    const out = new Uint8Array(4 + body.length);
    new DataView(out.buffer).setUint32(0, body.length, false);
    out.set(body, 4);
    return out;
  }

  feed(chunk: Bytes): Envelope[] {
    this.buf = concat(this.buf, chunk);
    const out: Envelope[] = [];
    while (this.buf.length >= 4) {
      const view = new DataView(this.buf.buffer, this.buf.byteOffset);
      const n = view.getUint32(0, false);
      if (this.buf.length < 4 + n) break;
      const body = this.buf.subarray(4, 4 + n);
      out.push(JSON.parse(decoder.decode(body)) as Envelope);
      this.buf = this.buf.slice(4 + n);
    }
    return out;
  }
}

export function makeFraming(name: 'nl' | 'lp'): Framing {
  return name === 'nl' ? new NewlineFraming() : new LengthPrefixFraming();
}
