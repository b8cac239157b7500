import { ServiceClient } from "./api.js";
import { HtmlAudioPlayer } from "./player.js";
import { TrialPanel } from "./ui.js";

function params(): URLSearchParams {
    return new URLSearchParams(window.location.search);
}

async function boot(): Promise<void> {
    const root = document.getElementById("app");
    if (!root) throw new Error("missing #app mount point");

    const service = params().get("service") ?? "http://127.0.0.1:8715";
    const participant = params().get("participant")
        ?? window.prompt("Participant id", "P1")
        ?? "P1";

    const loop = params().get("loop") === "1";
    const client = new ServiceClient(service, participant);
    const panel = new TrialPanel(root, client, new HtmlAudioPlayer(loop));
    await panel.init();
}

boot().catch((err) => console.error(err));
