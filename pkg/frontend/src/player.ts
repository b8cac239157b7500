// Playback abstraction. The real implementation swaps the source of a
// single <audio> element so pressing the other button mid-sentence
// switches immediately; tests inject a recording fake instead.

export interface Player {
    play(url: string): void;
    stop(): void;
}

export class HtmlAudioPlayer implements Player {
    private audio: HTMLAudioElement;

    constructor(loop = false) {
        this.audio = new Audio();
        this.audio.preload = "auto";
        this.audio.loop = loop; // default: one playback per press
    }

    play(url: string): void {
        this.audio.pause();
        this.audio.src = url;
        this.audio.currentTime = 0;
        const started = this.audio.play();
        if (started && typeof started.catch === "function") {
            started.catch(() => {
                /* autoplay restrictions or a torn-down element; harmless */
            });
        }
    }

    stop(): void {
        this.audio.pause();
        this.audio.currentTime = 0;
    }
}
