// Listener control panel: Sound A / Sound B / STOP / gain stepper /
// Next / trial counter, plus a break screen between sessions.
//
// The panel is deliberately blind: the service view carries no hint of
// which processing condition is behind a trial, and nothing here adds
// one.  The displayed gain always comes from the service response, so
// the panel can never drift from the authoritative state.

import { ServiceClient, TrialView } from "./api.js";
import { Player } from "./player.js";

const BREAK_SECONDS = 5 * 60; // upper bound on the between-session break

export interface PanelOptions {
    breakSeconds?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
    doc: Document, tag: K, className: string, text = ""
): HTMLElementTagNameMap[K] {
    const node = doc.createElement(tag);
    node.className = className;
    if (text) node.textContent = text;
    return node;
}

export class TrialPanel {
    private doc: Document;
    private lastSession: number | null = null;
    private breakTimer: ReturnType<typeof setInterval> | null = null;
    private busy = false;

    readonly banner: HTMLDivElement;
    readonly counter: HTMLSpanElement;
    readonly progress: HTMLSpanElement;
    readonly gainDisplay: HTMLSpanElement;
    readonly buttonA: HTMLButtonElement;
    readonly buttonB: HTMLButtonElement;
    readonly buttonUp: HTMLButtonElement;
    readonly buttonDown: HTMLButtonElement;
    readonly buttonStop: HTMLButtonElement;
    readonly buttonNext: HTMLButtonElement;
    readonly breakScreen: HTMLDivElement;
    readonly breakClock: HTMLSpanElement;
    readonly doneScreen: HTMLDivElement;

    constructor(private root: HTMLElement,
                private client: ServiceClient,
                private player: Player,
                private options: PanelOptions = {}) {
        this.doc = root.ownerDocument;
        const doc = this.doc;

        this.banner = el(doc, "div", "error-banner");
        this.banner.hidden = true;

        const header = el(doc, "div", "header");
        const counterLine = el(doc, "div", "counter", "No. ");
        this.counter = el(doc, "span", "counter-value", "–");
        counterLine.appendChild(this.counter);
        this.progress = el(doc, "span", "progress", "");
        header.append(counterLine, this.progress);

        this.buttonA = el(doc, "button", "sound sound-a", "Sound A");
        this.buttonB = el(doc, "button", "sound sound-b", "Sound B");
        const sounds = el(doc, "div", "sounds");
        sounds.append(this.buttonA, this.buttonB);

        this.buttonDown = el(doc, "button", "gain-step gain-down", "−1 dB");
        this.gainDisplay = el(doc, "span", "gain-value", "0 dB");
        this.buttonUp = el(doc, "button", "gain-step gain-up", "+1 dB");
        const gainRow = el(doc, "div", "gain-row");
        gainRow.append(this.buttonDown, this.gainDisplay, this.buttonUp);

        this.buttonStop = el(doc, "button", "stop", "STOP");
        this.buttonNext = el(doc, "button", "next", "Next");
        const controls = el(doc, "div", "controls");
        controls.append(this.buttonStop, this.buttonNext);

        this.breakScreen = el(doc, "div", "break-screen");
        this.breakScreen.hidden = true;
        this.breakScreen.append(
            el(doc, "p", "break-text", "Session complete. Take a short break."));
        this.breakClock = el(doc, "span", "break-clock", "");
        this.breakScreen.appendChild(this.breakClock);
        const resume = el(doc, "button", "break-continue", "Continue");
        resume.addEventListener("click", () => this.endBreak());
        this.breakScreen.appendChild(resume);

        this.doneScreen = el(doc, "div", "done-screen",
            "All comparisons are finished. Thank you!");
        this.doneScreen.hidden = true;

        root.append(this.banner, header, sounds, gainRow, controls,
            this.breakScreen, this.doneScreen);

        this.buttonA.addEventListener("click", () => this.playSound("A"));
        this.buttonB.addEventListener("click", () => this.playSound("B"));
        this.buttonUp.addEventListener("click", () => void this.step(1));
        this.buttonDown.addEventListener("click", () => void this.step(-1));
        this.buttonStop.addEventListener("click", () => void this.stop());
        this.buttonNext.addEventListener("click", () => void this.next());
        doc.addEventListener("keydown", (ev) => this.onKey(ev as KeyboardEvent));
    }

    async init(): Promise<void> {
        try {
            await this.client.startRun();
            const view = await this.client.trial();
            this.lastSession = view.session_index;
            this.render(view);
        } catch (err) {
            this.showError(`Cannot reach the trial service: ${String(err)}`);
            throw err;
        }
    }

    private render(view: TrialView): void {
        if (view.done) {
            this.doneScreen.hidden = false;
            this.setControlsEnabled(false);
            this.counter.textContent = String(view.total);
            this.progress.textContent = `${view.completed} / ${view.total}`;
            return;
        }
        this.counter.textContent = String(view.trial_number);
        this.progress.textContent = `${view.completed} / ${view.total}`;
        this.showGain(view.gain_db);
    }

    private showGain(gain: number): void {
        this.gainDisplay.textContent = `${gain > 0 ? "+" + gain : gain} dB`;
    }

    private showError(message: string): void {
        this.banner.textContent = message;
        this.banner.hidden = false;
        this.setControlsEnabled(false);
    }

    private setControlsEnabled(enabled: boolean): void {
        for (const b of [this.buttonA, this.buttonB, this.buttonUp,
                         this.buttonDown, this.buttonStop, this.buttonNext]) {
            b.disabled = !enabled;
        }
    }

    playSound(which: "A" | "B"): void {
        // swapping sources mid-sentence is allowed: no stop required
        this.player.play(this.client.audioUrl(which));
    }

    async step(delta: 1 | -1): Promise<void> {
        try {
            const res = await this.client.adjustGain(delta);
            this.showGain(res.gain_db);
            if (res.clamped) {
                this.gainDisplay.classList.add("clamped");
                setTimeout(() => this.gainDisplay.classList.remove("clamped"), 400);
            }
        } catch (err) {
            this.showError(String(err));
        }
    }

    async stop(): Promise<void> {
        this.player.stop();
        try {
            await this.client.stop();
        } catch (err) {
            this.showError(String(err));
        }
    }

    async next(): Promise<void> {
        if (this.busy) return;
        this.busy = true;
        try {
            this.player.stop();
            await this.client.next();
            const view = await this.client.trial();
            if (!view.done && this.lastSession !== null &&
                    view.session_index !== this.lastSession) {
                this.startBreak();
            }
            this.lastSession = view.session_index;
            this.render(view);
        } catch (err) {
            this.showError(String(err));
        } finally {
            this.busy = false;
        }
    }

    private startBreak(): void {
        let remaining = this.options.breakSeconds ?? BREAK_SECONDS;
        this.breakScreen.hidden = false;
        const tick = () => {
            const m = Math.floor(remaining / 60);
            const s = remaining % 60;
            this.breakClock.textContent =
                `${m}:${s.toString().padStart(2, "0")}`;
            if (remaining <= 0) this.endBreak();
            remaining -= 1;
        };
        tick();
        this.breakTimer = setInterval(tick, 1000);
    }

    private endBreak(): void {
        if (this.breakTimer !== null) {
            clearInterval(this.breakTimer);
            this.breakTimer = null;
        }
        this.breakScreen.hidden = true;
    }

    private onKey(ev: KeyboardEvent): void {
        if (!this.breakScreen.hidden) return;
        switch (ev.key) {
            case "a": case "A": this.playSound("A"); break;
            case "b": case "B": this.playSound("B"); break;
            case "ArrowUp": ev.preventDefault(); void this.step(1); break;
            case "ArrowDown": ev.preventDefault(); void this.step(-1); break;
            case "s": case "S": void this.stop(); break;
            case "n": case "N": void this.next(); break;
        }
    }
}
