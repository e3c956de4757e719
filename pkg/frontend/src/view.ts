/**
 * DOM rendering and input bindings. Snippets are rendered with textContent
 * only (never markup), so the two systems cannot be fingerprinted through
 * rendering differences. Progress counts judgeable pairs only.
 */

import { JudgeController, JudgeState } from "./controller.js";
import { JudgePair, Snippet } from "./schema.js";

function snippetList(doc: Document, snippets: Snippet[]): HTMLElement {
  const list = doc.createElement("ol");
  list.className = "snippets";
  for (const s of snippets) {
    const item = doc.createElement("li");
    const id = doc.createElement("span");
    id.className = "doc-id";
    id.textContent = s.doc_id;
    const text = doc.createElement("p");
    text.textContent = s.text; // plain text, never innerHTML
    item.append(id, text);
    list.appendChild(item);
  }
  return list;
}

function renderPair(
  doc: Document,
  root: HTMLElement,
  pair: JudgePair,
  judged: number,
  totalJudgeable: number,
  notice: string | undefined,
  onChoice: (c: "left" | "right" | "tie") => void,
): void {
  root.textContent = "";

  const progress = doc.createElement("div");
  progress.className = "progress";
  progress.textContent = `pair ${judged + 1} of ${totalJudgeable}`;
  root.appendChild(progress);

  if (notice) {
    const note = doc.createElement("div");
    note.className = "notice";
    note.textContent = notice;
    root.appendChild(note);
  }

  const query = doc.createElement("h2");
  query.className = "query";
  query.textContent = pair.query_text;
  root.appendChild(query);

  const columns = doc.createElement("div");
  columns.className = "columns";
  for (const [side, snippets] of [
    ["left", pair.left],
    ["right", pair.right],
  ] as const) {
    const col = doc.createElement("section");
    col.className = `column ${side}`;
    const head = doc.createElement("h3");
    head.textContent = side === "left" ? "Left" : "Right";
    col.append(head, snippetList(doc, snippets));
    columns.appendChild(col);
  }
  root.appendChild(columns);

  const controls = doc.createElement("div");
  controls.className = "controls";
  for (const [choice, label, key] of [
    ["left", "Left is better", "←"],
    ["tie", "Tie", "t"],
    ["right", "Right is better", "→"],
  ] as const) {
    const btn = doc.createElement("button");
    btn.dataset.choice = choice;
    btn.textContent = `${label} (${key})`;
    btn.addEventListener("click", () => onChoice(choice));
    controls.appendChild(btn);
  }
  root.appendChild(controls);
}

function renderDone(
  doc: Document,
  root: HTMLElement,
  judged: number,
  totalJudgeable: number,
  sessionId: string,
): void {
  root.textContent = "";
  const head = doc.createElement("h2");
  head.className = "done";
  head.textContent = "Session complete";
  const summary = doc.createElement("p");
  summary.textContent = `${judged} of ${totalJudgeable} judgeable pairs judged.`;
  const link = doc.createElement("a");
  link.className = "report-link";
  link.href = `/ab/sessions/${sessionId}/report`;
  link.textContent = "View the report";
  root.append(head, summary, link);
}

function renderError(doc: Document, root: HTMLElement, message: string, retry: () => void): void {
  root.textContent = "";
  const head = doc.createElement("h2");
  head.className = "error";
  head.textContent = "Something went wrong";
  const detail = doc.createElement("p");
  detail.textContent = message;
  const btn = doc.createElement("button");
  btn.className = "retry";
  btn.textContent = "Retry";
  btn.addEventListener("click", retry);
  root.append(head, detail, btn);
}

export function mountJudgeView(
  doc: Document,
  root: HTMLElement,
  controller: JudgeController,
  sessionId: string,
): void {
  const onChoice = (c: "left" | "right" | "tie") => void controller.submit(c);

  controller.subscribe((state: JudgeState) => {
    switch (state.kind) {
      case "loading":
        root.textContent = "loading…";
        break;
      case "judging":
        renderPair(doc, root, state.pair, state.judged, state.totalJudgeable,
                   state.notice, onChoice);
        break;
      case "done":
        renderDone(doc, root, state.judged, state.totalJudgeable, sessionId);
        break;
      case "error":
        renderError(doc, root, state.message, () => void controller.refresh());
        break;
    }
  });

  doc.addEventListener("keydown", (ev: KeyboardEvent) => {
    if (ev.key === "ArrowLeft") onChoice("left");
    else if (ev.key === "ArrowRight") onChoice("right");
    else if (ev.key === "t" || ev.key === "T") onChoice("tie");
  });
}
