/** TCP client for the session service (Node transport). */

import * as net from 'node:net';

import { makeFraming, type Framing } from './protocol.js';
import type { ClientCommand, Envelope } from './types.js';

export interface ClientOptions {
  host: string;
  port: number;
  framing?: 'nl' | 'lp';
}

export class ProbeClient {
  private socket: net.Socket | null = null;
  private framing: Framing;
  private seq = 0;
  private listeners: Array<(msg: Envelope) => void> = [];
  private closeListeners: Array<() => void> = [];

  constructor(private options: ClientOptions) {
    this.framing = makeFraming(options.framing ?? 'nl');
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection(
        { host: this.options.host, port: this.options.port },
        () => resolve(),
      );
      socket.on('data', (chunk: Buffer) => {
        let msgs: Envelope[];
        try {
          msgs = this.framing.feed(new Uint8Array(chunk));
        } catch {
          return; // garbage on the wire: skip, stream resyncs at next frame
        }
        for (const msg of msgs) {
          for (const fn of this.listeners) fn(msg);
        }
      });
      socket.on('error', reject);
      socket.on('close', () => {
        for (const fn of this.closeListeners) fn();
      });
      this.socket = socket;
    });
  }

  onMessage(fn: (msg: Envelope) => void): void {
    this.listeners.push(fn);
  }

  onClose(fn: () => void): void {
    this.closeListeners.push(fn);
  }

  send(command: ClientCommand): number {
    if (this.socket === null) throw new Error('not connected');
    this.seq += 1;
    const msg: Envelope = { type: command.type, seq: this.seq, payload: command.payload };
    this.socket.write(this.framing.encode(msg));
    return this.seq;
  }

  close(): void {
    this.socket?.destroy();
    this.socket = null;
  }
}
