/**
 * End-to-end: a scripted session against the real Python gateway.
 *
 * Builds a seeded 20-pair session on disk, starts `retrievelab serve` as a
 * child process, judges every pair through the client stack, and checks that
 * (a) the final report equals the CLI `ab-report` output on the same journal
 * and (b) no payload the client received contains assignment data.
 */

import { execFile, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { JudgeController } from "../src/controller.js";
import type { Choice, Report } from "../src/schema.js";

const execFileP = promisify(execFile);
const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");
const PORT = 8971;
const BASE = `http://127.0.0.1:${PORT}`;

const SETUP_SCRIPT = `
import sys
from retrievelab import abtest
from retrievelab.corpus import Corpus, Document, Query, QuerySet, save_corpus
from retrievelab.pipeline import RetrievalResult
from pathlib import Path

data_dir = Path(sys.argv[1])
(data_dir / "sessions").mkdir(parents=True)
corpus = Corpus([Document(f"d{i}", f"benchmark document number {i}") for i in range(4)])
save_corpus(corpus, data_dir / "corpus.jsonl")
(data_dir / "manifests.json").write_text("[]")

def res(qid, docs):
    final = tuple((d, 1.0 - i * 0.1) for i, d in enumerate(docs))
    return RetrievalResult(qid, final, final, 0.01, 0.01, 0.01)

n = 20
queries = QuerySet([Query(f"q{i:02d}", f"query number {i}") for i in range(n)])
results_a = [res(f"q{i:02d}", ["d0", "d1"]) for i in range(n)]
results_b = [res(f"q{i:02d}", ["d1", "d2"]) for i in range(n)]
abtest.build_session_from_results(
    "man-a", "man-b", results_a, results_b, queries, corpus, seed=20,
    session_id="e2e", journal_path=data_dir / "sessions" / "e2e.jsonl",
)
print("ok")
`;

let server: ChildProcess | undefined;
let dataDir: string;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/health`);
      if (res.status === 200) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("gateway did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "judgeboard-e2e-"));
  await execFileP("python3", ["-c", SETUP_SCRIPT, dataDir], { cwd: REPO_ROOT });
  server = spawn(
    "python3",
    ["-m", "retrievelab.cli", "serve", "--address", `127.0.0.1:${PORT}`,
     "--data-dir", dataDir],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await waitForHealth();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("scripted browser session against the real gateway", () => {
  it("judges all 20 pairs; report equals CLI ab-report; payloads are blinded", async () => {
    const payloads: unknown[] = [];
    const client = new GatewayClient(BASE);
    client.onPayload = (p) => payloads.push(p);

    const sessions = await client.listSessions();
    expect(sessions).toHaveLength(1);
    expect(sessions[0]!.session_id).toBe("e2e");
    expect(sessions[0]!.judgeable).toBe(20);

    const controller = new JudgeController(client, "e2e");
    await controller.refresh();

    // deterministic scripted judge: left, right, tie, left, right, tie, ...
    const script: Choice[] = ["left", "right", "tie"];
    let guard = 0;
    while (controller.getState().kind === "judging" && guard < 50) {
      await controller.submit(script[guard % script.length]!);
      guard++;
    }
    expect(controller.getState()).toMatchObject({
      kind: "done",
      judged: 20,
      totalJudgeable: 20,
    });

    const uiReport: Report = await client.report("e2e");
    expect(uiReport.partial).toBe(false);
    expect(uiReport.wins_a + uiReport.wins_b + uiReport.ties).toBe(20);
    expect(uiReport.ties).toBeGreaterThanOrEqual(6); // the scripted ties

    const { stdout } = await execFileP(
      "python3",
      ["-m", "retrievelab.cli", "ab-report", "--session",
       join(dataDir, "sessions", "e2e.jsonl")],
      { cwd: REPO_ROOT },
    );
    const cliReport = JSON.parse(stdout) as Report;
    expect(uiReport).toEqual(cliReport);

    // blinding audit: nothing the client ever received names an assignment
    expect(payloads.length).toBeGreaterThan(40);
    for (const payload of payloads) {
      const blob = JSON.stringify(payload);
      expect(blob).not.toContain("assignment");
      expect(blob).not.toContain("left_system");
      expect(blob).not.toContain('"man-a"');
      expect(blob).not.toContain('"man-b"');
    }
  }, 60_000);
});
