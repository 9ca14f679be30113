// Browser bootstrap: create a session, subscribe, wire the DOM. The page is
// served from /ui so every API path is origin-absolute.
import { EventFeed, ServiceClient } from "./client.js";
import { Controller } from "./controller.js";
import { renderChain, renderPlanCard, renderRoutines, renderStatePanel, renderToasts, renderTranscript, } from "./render.js";
function el(id) {
    const node = document.getElementById(id);
    if (node === null)
        throw new Error(`missing #${id}`);
    return node;
}
async function boot() {
    const client = new ServiceClient("");
    const session = await client.createSession({});
    const seed = await client.state(session.session_id);
    el("home-id").textContent = seed.home_id;
    const controller = new Controller(client, session.session_id, seed.state, (view, ui) => {
        el("chain").innerHTML = renderChain(view);
        el("transcript").innerHTML = renderTranscript(view);
        el("plan").innerHTML = renderPlanCard(view, ui);
        el("state").innerHTML = renderStatePanel(view);
        el("routines").innerHTML = renderRoutines(view);
        el("toasts").innerHTML = renderToasts(ui);
        const pill = el("connection");
        pill.textContent = ui.connection;
        pill.className = `pill ${ui.connection}`;
        const log = el("transcript");
        log.scrollTop = log.scrollHeight;
    });
    controller.paint();
    const feed = new EventFeed(client, session.session_id, {
        onEvent: (row) => controller.applyEvent(row),
        onConnection: (status) => controller.connection(status),
    });
    feed.start(0);
    const composer = el("composer");
    const input = el("composer-input");
    composer.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const text = input.value;
        input.value = "";
        void controller.sendCommand(text);
    });
    // rendered fragments carry data-role/data-action; delegate from the body
    document.body.addEventListener("submit", (ev) => {
        const form = ev.target;
        const role = form.getAttribute("data-role");
        if (role === null)
            return;
        ev.preventDefault();
        const data = new FormData(form);
        if (role === "clarify") {
            void controller.sendCommand(String(data.get("text") ?? ""));
        }
        else if (role === "critique") {
            const planId = form.getAttribute("data-plan");
            const critique = String(data.get("critique") ?? "").trim();
            if (planId !== null && critique !== "") {
                void controller.submitVerdict(planId, { verdict: "reject", critique });
            }
        }
    });
    document.body.addEventListener("click", (ev) => {
        const target = ev.target.closest("[data-action]");
        if (target === null)
            return;
        const action = target.getAttribute("data-action");
        if (action === "accept") {
            const planId = target.getAttribute("data-plan");
            if (planId !== null)
                void controller.submitVerdict(planId, { verdict: "accept" });
        }
        else if (action === "revise-open") {
            controller.openCritique();
        }
        else if (action === "dismiss-toast") {
            controller.dismissToast(Number(target.getAttribute("data-toast") ?? "0"));
        }
    });
}
void boot().catch((err) => {
    document.body.insertAdjacentHTML("beforeend", `<div class="boot-error">console failed to start: ${String(err)}</div>`);
});
