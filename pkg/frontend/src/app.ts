// Judge page: authenticate with an access token, then rate one blind poem
// at a time. The server is authoritative for session state, so a reload
// simply resumes at the next unrated poem.

import {
  ApiError,
  BlindPoem,
  FetchLike,
  JudgeApi,
  formatProbability,
  quantize,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderLogin(message = ""): string {
  return `
    <section class="card" id="login-view">
      <h1>Poem judging</h1>
      <p>Enter your access token to begin. Please judge unaided: no other
      people, books, or computer tools.</p>
      ${message ? `<p class="notice" id="login-message">${escapeHtml(message)}</p>` : ""}
      <input id="token-input" type="password" placeholder="access token" autocomplete="off" />
      <button id="login-btn">Start</button>
    </section>`;
}

export function renderPoem(poem: BlindPoem, value: number): string {
  const pct = formatProbability(value);
  const bodyLines = poem.body
    .split("\n")
    .map((line) => escapeHtml(line))
    .join("<br>");
  return `
    <section class="card" id="rating-view">
      <p id="progress">${poem.progress.rated} / ${poem.progress.total} rated</p>
      <article class="poem">
        <h2 id="title">${escapeHtml(poem.title)}</h2>
        <p id="body">${bodyLines}</p>
      </article>
      <label for="slider">How likely is this poem written by a real human?</label>
      <div class="controls">
        <input id="slider" type="range" min="0" max="1" step="0.01" value="${pct}" />
        <input id="prob-input" type="number" min="0" max="1" step="0.01" value="${pct}" />
      </div>
      <button id="submit-btn">Submit ${pct}</button>
      <div id="error" class="error hidden">
        <span id="error-text"></span>
        <button id="retry-btn">Retry</button>
      </div>
    </section>`;
}

export function renderDone(rated: number, total: number): string {
  return `
    <section class="card" id="done-view">
      <h1>All done</h1>
      <p id="done">You rated ${rated} of ${total} poems. Thank you.</p>
    </section>`;
}

type View = "login" | "rating" | "done";

export class JudgeApp {
  private api: JudgeApi | null = null;
  private current: BlindPoem | null = null;
  private value = 0.5;
  private busy = false;
  view: View = "login";

  constructor(
    private readonly root: HTMLElement,
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
    private readonly doc: Document = document,
  ) {}

  start(): void {
    this.showLogin();
  }

  private byId<T extends HTMLElement>(id: string): T {
    const el = this.doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  }

  showLogin(message = ""): void {
    this.view = "login";
    this.root.innerHTML = renderLogin(message);
    this.byId<HTMLButtonElement>("login-btn").addEventListener("click", () => {
      void this.login();
    });
  }

  async login(): Promise<void> {
    const token = this.byId<HTMLInputElement>("token-input").value.trim();
    if (!token) return;
    const api = new JudgeApi(this.baseUrl, token, this.fetchFn);
    try {
      await api.openSession();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.showLogin("That token was not recognized.");
        return;
      }
      this.showLogin("Could not reach the server. Try again.");
      return;
    }
    this.api = api;
    await this.advance();
  }

  /** Fetch the next poem; switches to the completion view when done. */
  async advance(): Promise<void> {
    if (!this.api) return;
    let poem: BlindPoem | null;
    try {
      poem = await this.api.next();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.showLogin("Your session expired; enter the token again.");
        return;
      }
      this.showLogin("Could not reach the server. Try again.");
      return;
    }
    if (poem === null) {
      const progress = await this.api.progress();
      this.view = "done";
      this.current = null;
      this.root.innerHTML = renderDone(progress.rated, progress.total);
      return;
    }
    this.current = poem;
    this.value = 0.5;
    this.showPoem();
  }

  private showPoem(): void {
    if (!this.current) return;
    this.view = "rating";
    this.root.innerHTML = renderPoem(this.current, this.value);
    const slider = this.byId<HTMLInputElement>("slider");
    const box = this.byId<HTMLInputElement>("prob-input");
    const submit = this.byId<HTMLButtonElement>("submit-btn");
    const sync = (raw: string) => {
      this.value = quantize(Number(raw));
      const text = formatProbability(this.value);
      slider.value = text;
      box.value = text;
      submit.textContent = `Submit ${text}`;
    };
    slider.addEventListener("input", () => sync(slider.value));
    box.addEventListener("input", () => sync(box.value));
    submit.addEventListener("click", () => {
      void this.submit();
    });
    this.byId<HTMLButtonElement>("retry-btn").addEventListener("click", () => {
      void this.submit();
    });
  }

  setValue(raw: number): void {
    this.value = quantize(raw);
  }

  async submit(): Promise<void> {
    if (!this.api || !this.current || this.busy) return;
    this.busy = true;
    const submit = this.byId<HTMLButtonElement>("submit-btn");
    submit.disabled = true;
    try {
      await this.api.submitRating(this.current.poem_id, this.value);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // already recorded server-side (e.g. an earlier attempt landed)
        this.busy = false;
        await this.advance();
        return;
      }
      // keep the entered value on screen and offer a retry
      this.busy = false;
      submit.disabled = false;
      const banner = this.byId<HTMLElement>("error");
      banner.classList.remove("hidden");
      this.byId<HTMLElement>("error-text").textContent =
        err instanceof ApiError
          ? `The server rejected the rating (${err.message}).`
          : "Network problem; your value is kept.";
      return;
    }
    this.busy = false;
    await this.advance();
  }
}

export function mountJudgeApp(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  new JudgeApp(root, "").start();
}

declare global {
  interface Window {
    __PROFTAP_NO_AUTOMOUNT__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__PROFTAP_NO_AUTOMOUNT__) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", mountJudgeApp);
  } else if (document.getElementById("app")) {
    mountJudgeApp();
  }
}
