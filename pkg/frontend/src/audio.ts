/** Note playback sinks. The view plays every received NoteEvent exactly once;
 * environments without audio output use the counting sink. */

export interface AudioSink {
  play(zone: number, gain: number): void;
}

export class CountingAudioSink implements AudioSink {
  readonly played: Array<{ zone: number; gain: number }> = [];

  play(zone: number, gain: number): void {
    this.played.push({ zone, gain });
  }
}

/** Seven-note just-intonation bank over a tonic, mirroring the server demo. */
export const SARGAM_RATIOS = [1, 9 / 8, 5 / 4, 4 / 3, 3 / 2, 5 / 3, 15 / 8];

export function zoneFrequency(zone: number, tonicHz = 240): number {
  const idx = (zone - 1) % SARGAM_RATIOS.length;
  const octave = Math.floor((zone - 1) / SARGAM_RATIOS.length);
  return tonicHz * SARGAM_RATIOS[idx] * 2 ** octave;
}

type AudioContextLike = {
  currentTime: number;
  createOscillator(): any;
  createGain(): any;
  destination: unknown;
};

/** WebAudio sink for browser hosts; constructed lazily so Node tests never
 * touch it. */
export class WebAudioSink implements AudioSink {
  constructor(private ctx: AudioContextLike, private decaySeconds = 0.5) {}

  play(zone: number, gain: number): void {
    const osc = this.ctx.createOscillator();
    const amp = this.ctx.createGain();
    osc.frequency.value = zoneFrequency(zone);
    const t0 = this.ctx.currentTime;
    amp.gain.setValueAtTime(gain, t0);
    amp.gain.exponentialRampToValueAtTime(Math.max(1e-4, gain * 1e-3),
                                          t0 + this.decaySeconds);
    osc.connect(amp);
    amp.connect(this.ctx.destination);
    osc.start(t0);
    osc.stop(t0 + this.decaySeconds);
  }
}
