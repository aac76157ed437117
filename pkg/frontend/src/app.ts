/** Headless demo driver: connects to a server, sweeps a scripted pointer
 * path across the surface, and logs frames and notes to the console.
 *
 * Usage: node dist/app.js [host] [port]
 */

import { ProbeClient } from './client.js';
import { pointerToHip } from './hip.js';
import { CountingAudioSink } from './audio.js';
import { ProbeView } from './view.js';

const host = process.argv[2] ?? '127.0.0.1';
const port = Number(process.argv[3] ?? 7600);

const canvas = { width: 400, height: 400 };
const audio = new CountingAudioSink();
const view = new ProbeView(audio);
const client = new ProbeClient({ host, port });

async function main(): Promise<void> {
  await client.connect();
  client.onMessage((msg) => view.applyMessage(msg));
  client.onClose(() => {
    console.log('connection closed');
    process.exit(0);
  });

  await waitFor(() => view.currentTile !== null, 5000);
  client.send({ type: 'toggle_friction', payload: { on: false } });
  view.depthOffset = -0.03;

  const steps = 90;
  for (let i = 0; i <= steps; i++) {
    const px = canvas.width * (0.15 + (0.7 * i) / steps);
    const py = canvas.height * 0.5;
    const cmd = pointerToHip(canvas, { x: px, y: py }, view.currentTile!, view.depthOffset);
    if (cmd) client.send(cmd);
    view.render();
    await sleep(16);
  }

  await sleep(300);
  view.render();
  console.log(`rendered ${view.renderedFrames} frames`);
  console.log('notes:', audio.played.map((n) => `${n.zone}@${n.gain.toFixed(2)}`).join(' '));
  client.close();
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(cond: () => boolean, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error('timed out waiting for server state');
    await sleep(20);
  }
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
