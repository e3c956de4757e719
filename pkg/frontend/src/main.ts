/**
 * Entry point: pick the session from ?session=<id> (or the first open one)
 * and mount the judging view.
 */

import { GatewayClient } from "./api.js";
import { JudgeController } from "./controller.js";
import { mountJudgeView } from "./view.js";

export async function bootstrap(doc: Document, baseUrl = ""): Promise<void> {
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const client = new GatewayClient(baseUrl);
  const params = new URLSearchParams(doc.location?.search ?? "");
  let sessionId = params.get("session");
  if (!sessionId) {
    const sessions = await client.listSessions();
    const open = sessions.find((s) => !s.complete) ?? sessions[0];
    if (!open) {
      root.textContent = "no sessions available";
      return;
    }
    sessionId = open.session_id;
  }
  const controller = new JudgeController(client, sessionId);
  mountJudgeView(doc, root, controller, sessionId);
  await controller.refresh();
}

if (typeof document !== "undefined") {
  void bootstrap(document);
}
