import { ApiClient } from "./api.js";
import { SearchParams, ServerConfig, Turn } from "./types.js";

// answer_rendered carries citations as markdown links: [[n]](url)
const CITATION_LINK = /\[\[(\d+)\]\]\(([^)]+)\)/g;

interface SettingsErrors {
  alpha?: string;
  gamma?: string;
  k?: string;
  scorer?: string;
}

export class ChatApp {
  sessionId: string | null = null;
  pending = false;
  params!: SearchParams;

  private transcript!: HTMLElement;
  private sourcePanel!: HTMLElement;
  private input!: HTMLInputElement;
  private sendButton!: HTMLButtonElement;
  private drawer!: HTMLElement;
  private scoresToggle!: HTMLInputElement;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
  ) {}

  /** Build the static DOM, fetch server defaults, open a session. */
  async init(): Promise<void> {
    this.root.innerHTML = `
      <header class="topbar">
        <h1>Archive assistant</h1>
        <label class="scores-toggle"><input type="checkbox" id="show-scores"> scores</label>
        <button id="settings-button" type="button">Settings</button>
      </header>
      <main class="layout">
        <section id="transcript" class="transcript" aria-live="polite"></section>
        <aside id="source-panel" class="source-panel" hidden>
          <button id="source-close" type="button" class="close">&times;</button>
          <h2>Source</h2>
          <div id="source-body"></div>
        </aside>
      </main>
      <div id="settings-drawer" class="drawer" hidden>
        <label>alpha <input id="set-alpha" type="number" min="0" max="1" step="0.05"></label>
        <label>gamma <input id="set-gamma" type="number" min="0" max="1" step="0.05"></label>
        <label>k <input id="set-k" type="number" min="1" step="1"></label>
        <label>scorer
          <select id="set-scorer">
            <option value="tfidf">tfidf</option>
            <option value="bm25">bm25</option>
          </select>
        </label>
        <p id="settings-error" class="settings-error" role="alert" hidden></p>
      </div>
      <form id="composer" class="composer">
        <input id="draft" type="text" autocomplete="off"
               placeholder="Ask the archive..." aria-label="message">
        <button id="send" type="submit">Send</button>
      </form>
    `;
    this.transcript = this.byId("transcript");
    this.sourcePanel = this.byId("source-panel");
    this.input = this.byId<HTMLInputElement>("draft");
    this.sendButton = this.byId<HTMLButtonElement>("send");
    this.drawer = this.byId("settings-drawer");
    this.scoresToggle = this.byId<HTMLInputElement>("show-scores");

    this.byId("settings-button").addEventListener("click", () => {
      this.drawer.hidden = !this.drawer.hidden;
    });
    this.byId("source-close").addEventListener("click", () => {
      this.sourcePanel.hidden = true;
    });
    this.byId<HTMLFormElement>("composer").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.sendCurrentDraft();
    });
    this.scoresToggle.addEventListener("change", () => {
      this.root.classList.toggle("show-scores", this.scoresToggle.checked);
    });
    for (const id of ["set-alpha", "set-gamma", "set-k", "set-scorer"]) {
      this.byId(id).addEventListener("change", () => this.readSettings());
    }

    // Defaults come from the server, never hardcoded.
    const config = await this.api.getConfig();
    this.applyConfig(config);
    this.sessionId = await this.api.createSession();
  }

  byId<T extends HTMLElement = HTMLElement>(id: string): T {
    const el = this.root.querySelector<T>(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  }

  applyConfig(config: ServerConfig): void {
    this.params = {
      alpha: config.alpha,
      gamma: config.gamma,
      k: config.k,
      scorer: config.scorer,
    };
    this.byId<HTMLInputElement>("set-alpha").value = String(config.alpha);
    this.byId<HTMLInputElement>("set-gamma").value = String(config.gamma);
    this.byId<HTMLInputElement>("set-k").value = String(config.k);
    this.byId<HTMLSelectElement>("set-scorer").value = config.scorer;
  }

  /** Validate the drawer; invalid values block sending, valid ones apply. */
  readSettings(): SettingsErrors {
    const errors: SettingsErrors = {};
    const alpha = Number(this.byId<HTMLInputElement>("set-alpha").value);
    const gamma = Number(this.byId<HTMLInputElement>("set-gamma").value);
    const k = Number(this.byId<HTMLInputElement>("set-k").value);
    const scorer = this.byId<HTMLSelectElement>("set-scorer").value;
    if (!Number.isFinite(alpha) || alpha < 0 || alpha > 1) errors.alpha = "alpha must be in [0, 1]";
    if (!Number.isFinite(gamma) || gamma < 0 || gamma > 1) errors.gamma = "gamma must be in [0, 1]";
    if (!Number.isInteger(k) || k < 1) errors.k = "k must be a positive integer";
    if (scorer !== "tfidf" && scorer !== "bm25") errors.scorer = "unknown scorer";

    const messageBox = this.byId("settings-error");
    const messages = Object.values(errors);
    if (messages.length > 0) {
      messageBox.textContent = messages.join("; ");
      messageBox.hidden = false;
      this.sendButton.disabled = true;
    } else {
      messageBox.hidden = true;
      this.sendButton.disabled = this.pending;
      this.params = { alpha, gamma, k, scorer };
    }
    return errors;
  }

  async sendCurrentDraft(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.pending || this.sendButton.disabled || !this.sessionId) return;
    this.setPending(true);

    const userBubble = this.appendBubble("user");
    userBubble.textContent = text;

    try {
      const result = await this.api.sendMessage(this.sessionId, text, this.params);
      this.input.value = ""; // clear the draft only once the turn landed
      this.renderTurn(result.turn, result.degraded);
    } catch (err) {
      // Keep the draft; surface the failure with a retry affordance.
      userBubble.remove();
      this.renderFailure(err instanceof Error ? err.message : String(err));
    } finally {
      this.setPending(false);
    }
  }

  setPending(pending: boolean): void {
    this.pending = pending;
    this.input.disabled = pending;
    this.sendButton.disabled = pending;
  }

  appendBubble(kind: "user" | "assistant" | "error"): HTMLElement {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${kind}`;
    this.transcript.appendChild(bubble);
    return bubble;
  }

  renderTurn(turn: Turn, degraded: boolean): void {
    const bubble = this.appendBubble("assistant");
    if (degraded) {
      const badge = document.createElement("span");
      badge.className = "badge degraded";
      badge.textContent = "degraded: language model unavailable";
      bubble.appendChild(badge);
    }
    const body = document.createElement("p");
    this.renderAnswer(body, turn);
    bubble.appendChild(body);

    if (turn.candidates.length > 0) {
      const scores = document.createElement("ul");
      scores.className = "debug-scores";
      for (const c of turn.candidates) {
        const li = document.createElement("li");
        li.textContent =
          `#${c.entry_id} final=${c.s_final.toFixed(3)} ` +
          `sem=${c.s_sem.toFixed(3)} ft=${c.s_ft.toFixed(3)}`;
        scores.appendChild(li);
      }
      bubble.appendChild(scores);
    }
  }

  /** Turn [[n]](url) spans into citation links; everything else is text. */
  renderAnswer(target: HTMLElement, turn: Turn): void {
    const byMarker = new Map(turn.citations.map((c) => [c.marker, c]));
    const text = turn.answer_rendered;
    let cursor = 0;
    for (const match of text.matchAll(CITATION_LINK)) {
      const index = match.index ?? 0;
      if (index > cursor) {
        target.appendChild(document.createTextNode(text.slice(cursor, index)));
      }
      const marker = Number(match[1]);
      const citation = byMarker.get(marker);
      const link = document.createElement("a");
      link.className = "citation";
      link.href = match[2] ?? citation?.url ?? "#";
      link.textContent = `[${marker}]`;
      if (citation) {
        link.dataset.entryId = String(citation.entry_id);
        link.addEventListener("click", (e) => {
          e.preventDefault();
          void this.openSourcePanel(citation.entry_id);
        });
      }
      target.appendChild(link);
      cursor = index + match[0].length;
    }
    if (cursor < text.length) {
      target.appendChild(document.createTextNode(text.slice(cursor)));
    }
  }

  async openSourcePanel(entryId: number): Promise<void> {
    const body = this.byId("source-body");
    body.textContent = "Loading...";
    this.sourcePanel.hidden = false;
    try {
      const entry = await this.api.getEntry(entryId);
      body.innerHTML = "";
      const meta = document.createElement("p");
      meta.className = "source-meta";
      meta.textContent = `${entry.author_name} - ${entry.date}`;
      const text = document.createElement("blockquote");
      text.className = "source-text";
      text.textContent = entry.text;
      const link = document.createElement("a");
      link.href = entry.url;
      link.textContent = "open original";
      link.target = "_blank";
      body.append(meta, text, link);
    } catch (err) {
      body.textContent = `Could not load entry ${entryId}: ${
        err instanceof Error ? err.message : String(err)
      }`;
    }
  }

  renderFailure(message: string): void {
    const bubble = this.appendBubble("error");
    const badge = document.createElement("span");
    badge.className = "badge error";
    badge.textContent = `request failed: ${message}`;
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      bubble.remove();
      void this.sendCurrentDraft();
    });
    bubble.append(badge, retry);
  }
}

export async function initApp(root: HTMLElement, api: ApiClient): Promise<ChatApp> {
  const app = new ChatApp(root, api);
  await app.init();
  return app;
}
