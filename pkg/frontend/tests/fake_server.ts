// In-memory implementation of the documented annotation API, used to drive the
// controller in tests. Semantics mirror the real service: per-annotator task
// queues, overlap subset, server-side label validation, kappa over the
// doubly-labeled overlap.

import type { FetchLike } from "../src/api";

export interface FakePost {
  id: string;
  text: string;
}

const ANTI = new Set(["TM", "ATM", "XOR", "TERF", "RW", "INTRA"]);
const PRO = new Set(["CEL", "REF", "CON"]);

export function cohenKappa(a: Record<string, string>, b: Record<string, string>): number | null {
  const ids = Object.keys(a);
  const n = ids.length;
  if (n === 0) return null;
  const observed = ids.filter((i) => a[i] === b[i]).length / n;
  const countsA: Record<string, number> = {};
  const countsB: Record<string, number> = {};
  for (const i of ids) {
    countsA[a[i]] = (countsA[a[i]] ?? 0) + 1;
    countsB[b[i]] = (countsB[b[i]] ?? 0) + 1;
  }
  let expected = 0;
  for (const label of new Set([...Object.keys(countsA), ...Object.keys(countsB)])) {
    expected += ((countsA[label] ?? 0) / n) * ((countsB[label] ?? 0) / n);
  }
  if (expected === 1) return null;
  return (observed - expected) / (1 - expected);
}

export class FakeServer {
  posts: FakePost[];
  annotators: [string, string];
  overlap: Set<string>;
  labels = new Map<string, { primary: string; sublabels: string[] }>();
  skips = new Map<string, string>();
  labelPosts = 0; // every POST /api/label that reached the server
  failNext: "reject" | "network" | null = null;
  referenceKappa: number | null = 0.64;

  constructor(posts: FakePost[], annotators: [string, string], overlapSize: number) {
    this.posts = posts;
    this.annotators = annotators;
    this.overlap = new Set(posts.slice(0, overlapSize).map((p) => p.id));
  }

  queue(annotator: string): string[] {
    if (annotator === this.annotators[0]) return this.posts.map((p) => p.id);
    if (annotator === this.annotators[1]) return this.posts.filter((p) => this.overlap.has(p.id)).map((p) => p.id);
    return [];
  }

  private key(annotator: string, postId: string): string {
    return `${annotator}:${postId}`;
  }

  agreementPayload() {
    const [first, second] = this.annotators;
    const a: Record<string, string> = {};
    const b: Record<string, string> = {};
    for (const postId of this.overlap) {
      const la = this.labels.get(this.key(first, postId));
      const lb = this.labels.get(this.key(second, postId));
      if (la && lb) {
        a[postId] = la.primary;
        b[postId] = lb.primary;
      }
    }
    const n = Object.keys(a).length;
    const kappa = cohenKappa(a, b);
    return {
      observed_agreement: n ? Object.keys(a).filter((i) => a[i] === b[i]).length / n : null,
      expected_agreement: null,
      kappa,
      n,
      note: n === 0 ? "no doubly-labeled overlap samples yet" : null,
      reference_kappa: this.referenceKappa,
    };
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://fake.test");
    const method = init?.method ?? "GET";
    if (this.failNext === "network") {
      this.failNext = null;
      throw new TypeError("fetch failed (simulated)");
    }

    if (url.pathname === "/api/task" && method === "GET") {
      const annotator = url.searchParams.get("annotator") ?? "";
      if (!this.queue(annotator).length && !this.annotators.includes(annotator as never)) {
        return this.error(404, "data", `unknown annotator '${annotator}'`);
      }
      const pending = this.queue(annotator).find(
        (id) => !this.labels.has(this.key(annotator, id)) && !this.skips.has(this.key(annotator, id)),
      );
      if (!pending) {
        return this.json({ done: true, annotator });
      }
      const post = this.posts.find((p) => p.id === pending)!;
      return this.json({
        done: false,
        post_id: post.id,
        display_text: post.text,
        codebook_version: "v1",
        annotator,
      });
    }

    if (url.pathname === "/api/label" && method === "POST") {
      this.labelPosts += 1;
      if (this.failNext === "reject") {
        this.failNext = null;
        return this.error(422, "data", "label rejected (simulated server rule)");
      }
      const body = JSON.parse(String(init?.body ?? "{}"));
      const violation = this.validate(body.primary, body.sublabels ?? []);
      if (violation) return this.error(422, "data", violation);
      if (!this.queue(body.annotator).includes(body.post_id)) {
        return this.error(422, "data", `post ${body.post_id} is not assigned to ${body.annotator}`);
      }
      this.labels.set(this.key(body.annotator, body.post_id), {
        primary: body.primary,
        sublabels: body.sublabels ?? [],
      });
      return this.json({ ok: true });
    }

    if (url.pathname === "/api/skip" && method === "POST") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (!body.reason) return this.error(422, "data", "skip requires a reason");
      this.skips.set(this.key(body.annotator, body.post_id), body.reason);
      return this.json({ ok: true });
    }

    if (url.pathname === "/api/agreement") {
      return this.json(this.agreementPayload());
    }

    if (url.pathname === "/api/progress") {
      const annotators: Record<string, object> = {};
      for (const annotator of this.annotators) {
        const assigned = this.queue(annotator);
        const labeled = assigned.filter((id) => this.labels.has(this.key(annotator, id))).length;
        const skipped = assigned.filter((id) => this.skips.has(this.key(annotator, id))).length;
        annotators[annotator] = {
          assigned: assigned.length,
          labeled,
          skipped,
          pending: assigned.length - labeled - skipped,
        };
      }
      return this.json({
        total_samples: this.posts.length,
        overlap_size: this.overlap.size,
        annotators,
      });
    }

    if (url.pathname === "/api/codebook") {
      return this.json({
        version: "v1",
        definitions: [
          { id: "TM", side: "anti", sublabel: "TM", definition: "def text tm" },
          { id: "CEL", side: "pro", sublabel: "CEL", definition: "def text cel" },
          { id: "IRR", side: "neutral", sublabel: null, definition: "def text irr" },
        ],
      });
    }

    return this.error(404, "data", `no route ${method} ${url.pathname}`);
  };

  private validate(primary: string, sublabels: string[]): string | null {
    if (!["AntiTrans", "ProTrans", "Neutral"].includes(primary)) {
      return `unknown primary label '${primary}'`;
    }
    if (primary === "Neutral" && sublabels.length > 0) {
      return "Neutral labels cannot carry sublabels";
    }
    const allowed = primary === "AntiTrans" ? ANTI : primary === "ProTrans" ? PRO : new Set<string>();
    for (const s of sublabels) {
      if (!allowed.has(s)) return `sublabel ${s} not valid for ${primary}`;
    }
    return null;
  }

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, category: string, message: string): Response {
    return this.json({ error: { category, message } }, status);
  }
}

export function makePosts(n: number): FakePost[] {
  return Array.from({ length: n }, (_, i) => ({
    id: `p${String(i).padStart(3, "0")}`,
    text: `sample text ${i}\n\n#tag${i % 5}`,
  }));
}
