// Thin typed client for the trial service. The service is the single
// source of truth for the gain and the trial counter; this client never
// caches state of its own.

export interface TrialView {
    participant: string;
    trial_number: number;
    session_index: number | null;
    gain_db: number;
    phase: string;
    completed: number;
    total: number;
    done: boolean;
}

export interface GainResponse {
    gain_db: number;
    clamped: boolean;
}

export interface Progress {
    participant: string;
    completed: number;
    total: number;
    done: boolean;
}

export class ServiceClient {
    constructor(readonly baseUrl: string, readonly participant: string) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const res = await fetch(this.baseUrl + path, init);
        if (!res.ok) {
            const body = await res.text().catch(() => "");
            throw new Error(`service ${res.status}: ${body || path}`);
        }
        return res.json() as Promise<T>;
    }

    private post<T>(path: string, payload: object): Promise<T> {
        return this.request<T>(path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(payload),
        });
    }

    startRun(): Promise<Progress> {
        return this.post("/run", { participant: this.participant });
    }

    trial(): Promise<TrialView> {
        return this.request(`/trial?participant=${encodeURIComponent(this.participant)}`);
    }

    audioUrl(which: "A" | "B"): string {
        // nonce defeats media caching; the same URL serves new bytes after
        // a gain change
        return `${this.baseUrl}/audio?participant=${encodeURIComponent(this.participant)}` +
            `&which=${which}&nonce=${Date.now()}`;
    }

    adjustGain(delta: 1 | -1): Promise<GainResponse> {
        return this.post("/gain", { participant: this.participant, delta });
    }

    next(): Promise<Progress> {
        return this.post("/next", { participant: this.participant });
    }

    stop(): Promise<{ phase: string }> {
        return this.post("/stop", { participant: this.participant });
    }

    progress(): Promise<Progress> {
        return this.request(`/progress?participant=${encodeURIComponent(this.participant)}`);
    }
}
