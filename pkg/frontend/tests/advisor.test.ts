/** The advisor feedback loop against a mocked API. */

import { beforeEach, describe, expect, it } from "vitest";

import { AdvisorWidget, CAUSE_OPTIONS } from "../src/widgets/advisor.js";
import { MockApi } from "./mockApi.js";

function click(root: ParentNode, selector: string): void {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`no element for ${selector}`);
  (node as HTMLElement).click();
}

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("conversion", () => {
  let api: MockApi;

  beforeEach(() => {
    api = new MockApi();
  });

  it("removes the advice and keeps it gone across reloads", async () => {
    const widget = new AdvisorWidget(api, document.createElement("div"));
    await widget.load();
    const target = widget.container.querySelector(".advice")!.getAttribute("data-advice-id")!;

    click(widget.container, `[data-advice-id="${target}"] [data-action="converted"]`);
    await flush();
    expect(widget.container.querySelector(`[data-advice-id="${target}"]`)).toBeNull();

    // a brand-new widget instance (page reload) still does not see it
    const reloaded = new AdvisorWidget(api, document.createElement("div"));
    await reloaded.load();
    expect(reloaded.container.querySelector(`[data-advice-id="${target}"]`)).toBeNull();
    expect(reloaded.container.querySelectorAll(".advice")).toHaveLength(3);

    // and the backend saw exactly one converted record
    expect(api.feedbackCalls).toEqual([{ adviceId: target, action: "converted", cause: undefined }]);
  });
});

describe("reject flow", () => {
  it("always raises the two-cause prompt before posting", async () => {
    const api = new MockApi();
    const widget = new AdvisorWidget(api, document.createElement("div"));
    await widget.load();
    const card = widget.container.querySelector(".advice")!;
    const target = card.getAttribute("data-advice-id")!;

    click(card, '[data-action="reject"]');
    await flush();
    // nothing posted yet; a dialog with exactly the two causes is showing
    expect(api.feedbackCalls).toHaveLength(0);
    const dialog = card.querySelector(".cause-dialog")!;
    expect(dialog).toBeTruthy();
    const options = dialog.querySelectorAll(".cause-option");
    expect(options).toHaveLength(2);
    expect([...options].map((o) => o.getAttribute("data-cause"))).toEqual(
      CAUSE_OPTIONS.map((c) => c.cause),
    );

    click(dialog, '[data-cause="advice_mistrust"]');
    await flush();
    expect(api.feedbackCalls).toEqual([
      { adviceId: target, action: "reject", cause: "advice_mistrust" },
    ]);
    // both shifting advices lost a point (advice-type penalty), list re-rendered
    const scores = [...widget.container.querySelectorAll(".advice")].map(
      (node) => [node.getAttribute("data-advice-id"), node.getAttribute("data-score")],
    );
    expect(scores).toContainEqual(["alice:shifting:washer1", "1"]);
    expect(scores).toContainEqual(["alice:shifting:dishwasher1", "-1"]);
  });

  it("cancel closes the dialog without posting", async () => {
    const api = new MockApi();
    const widget = new AdvisorWidget(api, document.createElement("div"));
    await widget.load();
    const card = widget.container.querySelector(".advice")!;
    click(card, '[data-action="reject"]');
    click(card, ".cause-cancel");
    expect(card.querySelector(".cause-dialog")).toBeNull();
    expect(api.feedbackCalls).toHaveLength(0);
  });
});

describe("in-flight handling", () => {
  it("disables every feedback button while a POST is pending", async () => {
    const api = new MockApi();
    let release!: () => void;
    api.gate = new Promise((resolve) => {
      release = resolve;
    });
    const widget = new AdvisorWidget(api, document.createElement("div"));
    await widget.load();

    click(widget.container, '.advice [data-action="accept"]');
    await flush();
    const buttons = [...widget.container.querySelectorAll("button")] as HTMLButtonElement[];
    expect(buttons.length).toBeGreaterThan(0);
    expect(buttons.every((b) => b.disabled)).toBe(true);
    // a second click while pending does not double-post
    click(widget.container, '.advice [data-action="converted"]');
    release();
    await flush();
    expect(api.feedbackCalls).toHaveLength(1);
    expect(api.feedbackCalls[0].action).toBe("accept");
    // the refreshed list is interactive again
    const after = [...widget.container.querySelectorAll("button")] as HTMLButtonElement[];
    expect(after.every((b) => !b.disabled)).toBe(true);
  });

  it("keeps the advice with a retry message when the POST fails", async () => {
    const api = new MockApi();
    api.failFeedback = true;
    const widget = new AdvisorWidget(api, document.createElement("div"));
    await widget.load();
    const target = widget.container.querySelector(".advice")!.getAttribute("data-advice-id")!;

    click(widget.container, `[data-advice-id="${target}"] [data-action="accept"]`);
    await flush();
    const card = widget.container.querySelector(`[data-advice-id="${target}"]`)!;
    expect(card).toBeTruthy();
    expect(card.querySelector(".feedback-error")?.textContent).toContain("try again");
    const buttons = [...card.querySelectorAll(".feedback")] as HTMLButtonElement[];
    expect(buttons.every((b) => !b.disabled)).toBe(true);
  });
});
