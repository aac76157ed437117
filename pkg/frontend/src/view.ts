/** View state: a pure function of received frames plus local settings.
 * All simulation authority stays server-side; the only way the view affects
 * the session is by emitting ClientCommands elsewhere. */

import { CountingAudioSink, type AudioSink } from './audio.js';
import { shadedRelief, type ReliefImage } from './relief.js';
import { Tile } from './tile.js';
import type { Envelope, FramePayload, NoteEvent, TilePayload, ViewDescriptor } from './types.js';

export type ConnectionStatus = 'connecting' | 'connected' | 'degraded' | 'closed';

export interface RenderPlan {
  relief: ReliefImage | null;
  proxy: { x: number; y: number; color: string } | null;
  hip: { x: number; y: number } | null;
  forceArrow: { x: number; y: number; dx: number; dy: number; magnitude: number } | null;
  muReadout: number | null;
  tick: number | null;
}

const ARROW_SCALE = 0.02; // workspace units per force unit

export class ProbeView {
  status: ConnectionStatus = 'connecting';
  frictionOverlay = false;
  depthOffset = -0.01;
  renderedFrames = 0;

  private latestSeq = -1;
  private latestFrame: FramePayload | null = null;
  private lastRenderedSeq = -1;
  private pendingNotes: NoteEvent[] = [];
  private tile: Tile | null = null;
  private relief: ReliefImage | null = null;
  private droppedFrames = 0;

  constructor(private audio: AudioSink = new CountingAudioSink()) {}

  get currentTile(): Tile | null {
    return this.tile;
  }

  get descriptor(): ViewDescriptor | null {
    return this.tile?.view ?? this.latestFrame?.view ?? null;
  }

  /** Route one server message into the view state. */
  applyMessage(msg: Envelope): void {
    switch (msg.type) {
      case 'hello':
        this.status = 'connected';
        break;
      case 'tile':
        this.tile = new Tile(msg.payload as unknown as TilePayload);
        this.relief = null; // re-shade lazily on next render
        break;
      case 'frame':
        this.acceptFrame(msg);
        break;
      case 'error':
        this.status = 'degraded';
        break;
      default:
        break; // acks and future message kinds
    }
  }

  private acceptFrame(msg: Envelope): void {
    const seq = msg.seq ?? -1;
    const payload = msg.payload as unknown as FramePayload;
    if (!payload || !Array.isArray(payload.proxy) || !Array.isArray(payload.force)) {
      this.status = 'degraded'; // malformed frame: dropped, connection flagged
      return;
    }
    if (seq <= this.latestSeq) {
      return; // stale or regressed sequence: latest wins
    }
    this.latestSeq = seq;
    if (this.latestFrame !== null && this.lastRenderedSeq < this.latestSeq - 1) {
      this.droppedFrames += 1;
    }
    this.latestFrame = payload;
    // Notes are queued on receipt so coalesced frames still sound.
    for (const ev of payload.events) {
      this.pendingNotes.push(ev);
    }
  }

  setFrictionOverlay(on: boolean): void {
    if (on !== this.frictionOverlay) {
      this.frictionOverlay = on;
      this.relief = null;
    }
  }

  adjustDepthOffset(wheelDelta: number): number {
    this.depthOffset = Math.max(-0.2, Math.min(0.2, this.depthOffset + wheelDelta));
    return this.depthOffset;
  }

  /** Render the newest frame (if any) and flush queued notes.
   * Returns the declarative plan a canvas adapter can draw. */
  render(): RenderPlan {
    for (const ev of this.pendingNotes) {
      this.audio.play(ev.zone, ev.gain);
    }
    this.pendingNotes = [];
    const frame = this.latestFrame;
    if (this.tile !== null && this.relief === null) {
      this.relief = shadedRelief(this.tile, this.frictionOverlay);
    }
    if (frame === null) {
      return { relief: this.relief, proxy: null, hip: null, forceArrow: null,
               muReadout: null, tick: null };
    }
    if (this.latestSeq > this.lastRenderedSeq) {
      this.lastRenderedSeq = this.latestSeq;
      this.renderedFrames += 1;
    }
    const fmag = Math.hypot(frame.force[0], frame.force[1], frame.force[2]);
    return {
      relief: this.relief,
      proxy: {
        x: frame.proxy[0],
        y: frame.proxy[1],
        color: frame.stuck ? '#d08020' : frame.contact ? '#2060d0' : '#60c060',
      },
      hip: { x: frame.hip[0], y: frame.hip[1] },
      forceArrow: fmag > 0
        ? { x: frame.proxy[0], y: frame.proxy[1],
            dx: frame.force[0] * ARROW_SCALE, dy: frame.force[1] * ARROW_SCALE,
            magnitude: fmag }
        : null,
      muReadout: frame.mu_d,
      tick: frame.tick,
    };
  }
}
