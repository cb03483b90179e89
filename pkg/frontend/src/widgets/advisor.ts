/** The advisor widget: ranked advice messages with the three-button
 * feedback scale. "No thanks" first asks which of the two causes applies,
 * and nothing is posted until one is picked. Buttons lock while a POST is
 * in flight; the list the server returns after feedback replaces the view. */

import { el } from "../dom.js";
import type { Advice, Api, FeedbackAction, RejectCause } from "../types.js";

export const CAUSE_OPTIONS: { cause: RejectCause; label: string }[] = [
  { cause: "device_reluctance", label: "I'd rather not change how I use this device" },
  { cause: "advice_mistrust", label: "This kind of advice is not useful to me" },
];

export class AdvisorWidget {
  private inFlight = false;

  constructor(private api: Api, readonly container: HTMLElement) {
    this.container.classList.add("advisor");
  }

  async load(): Promise<void> {
    this.render(await this.api.advices());
  }

  render(advices: Advice[]): void {
    if (advices.length === 0) {
      this.container.replaceChildren(el("p", { class: "empty" }, "no advices right now"));
      return;
    }
    this.container.replaceChildren(
      ...advices.map((advice) => this.adviceCard(advice)),
    );
  }

  private adviceCard(advice: Advice): HTMLElement {
    const ok = el("button", { class: "feedback ok", "data-action": "accept" }, "Ok thanks");
    const done = el(
      "button",
      { class: "feedback converted", "data-action": "converted" },
      "I'm already doing it",
    );
    const no = el("button", { class: "feedback reject", "data-action": "reject" }, "No thanks");
    ok.addEventListener("click", () => void this.post(advice, "accept"));
    done.addEventListener("click", () => void this.post(advice, "converted"));
    const card = el(
      "article",
      { class: "advice", "data-advice-id": advice.advice_id, "data-score": String(advice.score) },
      el("p", { class: "advice-message" }, advice.message),
      el("div", { class: "advice-buttons" }, ok, done, no),
    );
    no.addEventListener("click", () => this.openCauseDialog(card, advice));
    return card;
  }

  /** "No thanks" never posts directly: the user picks one of the two causes. */
  private openCauseDialog(card: HTMLElement, advice: Advice): void {
    if (this.inFlight || card.querySelector(".cause-dialog")) return;
    const buttons = CAUSE_OPTIONS.map(({ cause, label }) => {
      const button = el("button", { class: "cause-option", "data-cause": cause }, label);
      button.addEventListener("click", () => void this.post(advice, "reject", cause));
      return button;
    });
    const cancel = el("button", { class: "cause-cancel" }, "Cancel");
    const dialog = el(
      "div",
      { class: "cause-dialog" },
      el("p", {}, "Why not?"),
      ...buttons,
      cancel,
    );
    cancel.addEventListener("click", () => dialog.remove());
    card.append(dialog);
  }

  private setButtonsDisabled(disabled: boolean): void {
    for (const button of this.container.querySelectorAll("button")) {
      (button as HTMLButtonElement).disabled = disabled;
    }
  }

  private async post(advice: Advice, action: FeedbackAction, cause?: RejectCause): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.setButtonsDisabled(true);
    try {
      const refreshed = await this.api.sendFeedback(advice.advice_id, action, cause);
      this.render(refreshed);
    } catch (error) {
      // the advice stays; offer a visible retry affordance
      this.setButtonsDisabled(false);
      const card = this.container.querySelector(`[data-advice-id="${advice.advice_id}"]`);
      if (card && !card.querySelector(".feedback-error")) {
        card.append(
          el("p", { class: "feedback-error" },
            `feedback failed (${(error as Error).message}); try again`),
        );
      }
    } finally {
      this.inFlight = false;
    }
  }
}
