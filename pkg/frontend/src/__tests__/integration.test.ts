/** Scripted screening session against the real Python server.
 *
 * Two annotators decide 10 pairs through the UI's own client code; the
 * server's /export must match `verify finalize` byte for byte, and no
 * queue or pair response may leak one annotator's decisions to the other.
 */

import { type ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../api.js";
import { ScreeningController } from "../controller.js";
import type { Decision } from "../types.js";

const PYTHON = process.env.PYTHON ?? "python3";
const N_PAIRS = 10;

function candidateLine(i: number): string {
  return JSON.stringify({
    pair_id: `p${i}`,
    src_text: { id: `p${i}-s`, text: `the cat number ${i}`, lang: "en" },
    tgt_text: { id: `p${i}-t`, text: `猫 ${i}`, lang: "zh" },
    src_clips: [`sc${i}`],
    tgt_clips: [`tc${i}`],
    llm_rating: 5,
    cosine: 0.9,
    decisions: {},
  });
}

let server: ChildProcess;
let base = "";
let dir = "";
let poolPath = "";
let decisionsPath = "";
const rawResponses: Array<{ path: string; body: string }> = [];

async function trackedFetch(input: string, init?: RequestInit): Promise<Response> {
  const resp = await fetch(input, init);
  const clone = resp.clone();
  rawResponses.push({ path: new URL(input).pathname, body: await clone.text() });
  return resp;
}

beforeAll(async () => {
  dir = mkdtempSync(join(tmpdir(), "review-ui-"));
  poolPath = join(dir, "pool.jsonl");
  decisionsPath = join(dir, "decisions.jsonl");
  writeFileSync(poolPath, Array.from({ length: N_PAIRS }, (_, i) => candidateLine(i)).join("\n") + "\n");

  server = spawn(PYTHON, [
    "-m", "s2skit.cli", "review", "serve",
    "--pool", poolPath,
    "--annotators", "A,B",
    "--decisions", decisionsPath,
    "--port", "0",
  ]);
  base = await new Promise<string>((resolve, reject) => {
    let out = "";
    const timer = setTimeout(() => reject(new Error(`server did not start: ${out}`)), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const match = out.match(/listening on (http:\/\/[\S]+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${out}`)));
  });
}, 20000);

afterAll(() => {
  server?.kill();
});

describe("scripted dual-annotator session", () => {
  // A keeps even pairs, discards odd; B keeps multiples of 3 and even pairs
  const decisionOf = (annotator: string, i: number): Decision => {
    if (annotator === "A") return i % 2 === 0 ? "keep" : "discard";
    return i % 2 === 0 || i % 3 === 0 ? "keep" : "discard";
  };
  const expectedStrict = Array.from({ length: N_PAIRS }, (_, i) => i).filter(
    (i) => decisionOf("A", i) === "keep" && decisionOf("B", i) === "keep",
  );

  it("both annotators work through their queues independently", async () => {
    for (const annotator of ["A", "B"]) {
      const api = new ReviewApi(base, trackedFetch);
      const session = await api.session();
      expect(session.annotators).toEqual(["A", "B"]);
      const ctl = new ScreeningController(api, session.session_id, annotator);
      await ctl.refresh();
      expect(ctl.total).toBe(N_PAIRS);
      expect(ctl.remaining()).toBe(N_PAIRS); // untouched by the other annotator
      let index = 0;
      while (ctl.current() !== null) {
        expect(ctl.current()!.pair_id).toBe(`p${index}`); // server order preserved
        await ctl.decide(decisionOf(annotator, index));
        index += 1;
      }
      expect(ctl.isComplete()).toBe(true);
      await ctl.refresh();
      expect(ctl.decided).toBe(N_PAIRS);
    }
    const api = new ReviewApi(base, trackedFetch);
    const progress = await api.progress();
    expect(progress.annotators["A"]).toEqual({ decided: N_PAIRS, total: N_PAIRS });
    expect(progress.annotators["B"]).toEqual({ decided: N_PAIRS, total: N_PAIRS });
  });

  it("undo round-trips through the server", async () => {
    const api = new ReviewApi(base, trackedFetch);
    const ctl = new ScreeningController(api, (await api.session()).session_id, "A");
    await ctl.refresh();
    expect(ctl.remaining()).toBe(0); // everything decided already
    // overwrite p0 and undo it back
    await api.submitDecision("A", "p0", "discard");
    await api.submitDecision("A", "p0", "keep");
    const progress = await api.progress();
    expect(progress.annotators["A"]!.decided).toBe(N_PAIRS);
  });

  it("no response to one annotator ever contains the other's decisions", () => {
    const sensitive = /"(keep|discard)"/;
    for (const r of rawResponses) {
      if (r.path.includes("/queue") || r.path.includes("/pair") || r.path === "/progress") {
        expect(r.body).not.toMatch(sensitive);
      }
    }
    expect(rawResponses.some((r) => r.path.includes("/queue"))).toBe(true);
  });

  it("/export equals `verify finalize` byte for byte", async () => {
    const api = new ReviewApi(base, trackedFetch);
    const exported = await api.exportStrict();
    expect(exported.status).toBe("complete");
    const body = exported.status === "complete" ? exported.body : "";
    const rows = body.trim().split("\n").map((line) => JSON.parse(line));
    expect(rows.map((r) => r.pair_id)).toEqual(expectedStrict.map((i) => `p${i}`));
    for (const row of rows) {
      expect(row.decisions).toEqual({ A: "keep", B: "keep" });
    }

    const outPath = join(dir, "strict.jsonl");
    execFileSync(PYTHON, [
      "-m", "s2skit.cli", "verify", "finalize",
      "--pool", poolPath,
      "--decisions", decisionsPath,
      "--annotators", "A,B",
      "--out", outPath,
    ]);
    expect(Buffer.from(body, "utf-8").equals(readFileSync(outPath))).toBe(true);
  });
});
