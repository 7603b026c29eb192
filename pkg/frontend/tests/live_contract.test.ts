// Contract test against a real running service (the Python suite spawns one
// and points STANCENET_API_URL here). Skipped otherwise.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { SessionController } from "../src/controller";

const BASE = process.env.STANCENET_API_URL ?? "";

function planned(annotator: string, postId: string): "AntiTrans" | "ProTrans" | "Neutral" {
  const rank = Number(postId.replace(/\D/g, "")) || 0;
  const primary = rank % 3 === 0 ? "AntiTrans" : rank % 3 === 1 ? "ProTrans" : "Neutral";
  if (annotator.endsWith("2") && rank % 7 === 0) {
    return primary === "Neutral" ? "ProTrans" : "Neutral";
  }
  return primary;
}

describe.skipIf(!BASE)("live service contract", () => {
  it("labels the whole fixture session for both annotators", async () => {
    for (const annotator of ["a1", "a2"]) {
      const api = new ApiClient((input, init) => fetch(BASE + input, init), "");
      const controller = new SessionController(api);
      await controller.start(annotator);
      let guard = 0;
      while (controller.state.phase === "labeling") {
        const postId = controller.state.task!.post_id!;
        const primary = planned(annotator, postId);
        controller.selectPrimary(primary);
        if (primary === "AntiTrans") controller.toggleSublabel("TM");
        if (primary === "ProTrans") controller.toggleSublabel("CEL");
        await controller.submitAndAdvance();
        if (++guard > 1000) throw new Error("did not terminate");
      }
      expect(controller.state.phase).toBe("done");
      expect(controller.state.retryBanner).toBeNull();
      // completion screen carries the final agreement panel
      expect(controller.state.agreement).not.toBeNull();
    }
  }, 120_000);
});
