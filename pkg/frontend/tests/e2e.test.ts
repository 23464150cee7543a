// @vitest-environment jsdom
/**
 * End-to-end: a browser-like session against the real annotation service.
 *
 * Spawns `facetkit serve` (the Python package must be installed), walks
 * qualification and three judgments through the DOM, then checks the
 * service export over HTTP. One judgment per task, so every judged task
 * resolves in the export immediately.
 */

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { AnnotationApi } from '../src/api.js';
import { AnnotationSession } from '../src/session.js';
import { AnnotationApp } from '../src/view.js';

const PORT = 8493;
const BASE = `http://127.0.0.1:${PORT}`;

const PAIRS = [
  { query: 'city lights', ground_truth: ['alpha one', 'alpha two'], generated: ['beta one', 'beta two'] },
  { query: 'river maps', ground_truth: ['gamma one', 'gamma two'], generated: ['delta one', 'delta two'] },
  { query: 'night sky', ground_truth: ['epsilon one', 'epsilon two'], generated: ['zeta one', 'zeta two'] },
];

const GOLD = [
  { gold_id: 'g1', query: 'gold a', left: ['clean pair', 'tidy pair'], right: ['same same', 'same same'], correct: 'left' },
  { gold_id: 'g2', query: 'gold b', left: ['also fine', 'quite fine'], right: ['rep rep', 'rep rep'], correct: 'left' },
];

let service: ChildProcess;

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 15_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/progress`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error('annotation service did not come up');
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'facetkit-ui-e2e-'));
  writeFileSync(join(dir, 'pairs.jsonl'), PAIRS.map((p) => JSON.stringify(p)).join('\n') + '\n');
  writeFileSync(join(dir, 'gold.jsonl'), GOLD.map((g) => JSON.stringify(g)).join('\n') + '\n');
  service = spawn(
    'facetkit',
    [
      '--seed', '21',
      'serve',
      '--pairs', join(dir, 'pairs.jsonl'),
      '--gold', join(dir, 'gold.jsonl'),
      '--log', join(dir, 'session.log'),
      '--judgments-per-task', '1',
      '--port', String(PORT),
    ],
    { stdio: 'ignore' },
  );
  await waitForService();
}, 30_000);

afterAll(() => {
  service?.kill();
});

function click(root: HTMLElement, selector: string): void {
  const element = root.querySelector<HTMLElement>(selector);
  if (!element) throw new Error(`no element for ${selector} in: ${root.innerHTML}`);
  element.dispatchEvent(new MouseEvent('click', { bubbles: true }));
}

function assertNoSourceLeakage(root: HTMLElement): void {
  const html = root.innerHTML.toLowerCase();
  for (const marker of ['ground', 'truth', 'generated', 'source', 'left_is']) {
    expect(html, `DOM leaked "${marker}"`).not.toContain(marker);
  }
}

describe('browser session against the live service', () => {
  it('qualifies, judges 3 tasks, export holds exactly 3 resolved judgments', async () => {
    document.body.innerHTML = '<main id="app" tabindex="0"></main>';
    const root = document.getElementById('app') as HTMLElement;
    const session = new AnnotationSession(new AnnotationApi(BASE), 'worker-1', 'coherency');
    const app = new AnnotationApp(root, session);
    await app.start();

    // qualification: gold tasks flow through the normal task panels
    expect(root.textContent).toContain('Qualification 1 of 2');
    assertNoSourceLeakage(root);
    for (let i = 0; i < GOLD.length; i++) {
      click(root, '.option-panel[data-side="left"]');
      click(root, '#submit');
      await app.whenIdle();
    }

    // three real tasks; double-click submit on the second one
    for (let judged = 0; judged < 3; judged++) {
      expect(session.current.kind).toBe('task');
      assertNoSourceLeakage(root);
      expect(root.textContent).toContain(`Judged so far: ${judged}`);
      click(root, '.option-panel[data-side="right"]');
      click(root, '#submit');
      if (judged === 1) click(root, '#submit'); // double submit in flight
      await app.whenIdle();
    }
    expect(session.current.kind).toBe('done');
    expect(root.textContent).toContain('All done');
    expect(root.querySelector('#judged-count')?.textContent).toBe('3');

    const exportBody = (await (await fetch(`${BASE}/export?criterion=coherency`)).json()) as {
      complete: Array<{ judgments: Array<{ annotator_id: string; choice: string }> }>;
      incomplete: string[];
    };
    const resolved = exportBody.complete.flatMap((entry) => entry.judgments);
    expect(resolved).toHaveLength(3);
    expect(resolved.every((j) => j.annotator_id === 'worker-1')).toBe(true);
    expect(resolved.every((j) => j.choice === 'A' || j.choice === 'B')).toBe(true);

    // the double submit really reached the server only once
    const progress = (await (await fetch(`${BASE}/progress`)).json()) as { judgments: number };
    expect(progress.judgments).toBe(3);
  }, 30_000);

  it('reload resumes with the sticky open task for the other criterion', async () => {
    document.body.innerHTML = '<main id="app" tabindex="0"></main>';
    const root = document.getElementById('app') as HTMLElement;
    const session = new AnnotationSession(new AnnotationApi(BASE), 'worker-1', 'quality');
    const app = new AnnotationApp(root, session);
    await app.start();
    const first = session.current;
    expect(first.kind).toBe('task');

    // simulate a reload: fresh DOM, fresh session, same annotator
    document.body.innerHTML = '<main id="app" tabindex="0"></main>';
    const root2 = document.getElementById('app') as HTMLElement;
    const session2 = new AnnotationSession(new AnnotationApi(BASE), 'worker-1', 'quality');
    const app2 = new AnnotationApp(root2, session2);
    await app2.start();
    const second = session2.current;
    expect(second.kind).toBe('task');
    expect(first.kind === 'task' && second.kind === 'task' && first.task.task_id === second.task.task_id).toBe(true);
  }, 30_000);
});
