/** Bootstrap: join the session named by ?session=..., or show a small
 * start form that creates one through the API. */

import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

const api = new ApiClient("");

function startApp(root: HTMLElement, sessionId: string): void {
  const app = new AnnotationApp(root, api, sessionId);
  void app.start();
}

async function showStartForm(root: HTMLElement): Promise<void> {
  const info = await api.info();
  root.textContent = "";
  const form = document.createElement("div");
  form.className = "start-form";
  form.innerHTML = `
    <h2>new annotation session</h2>
    <label>context dimension
      <select id="dimension">
        <option value="location">location</option>
        <option value="time">time</option>
        <option value="user_tags">user tags</option>
        <option value="description_keywords">description keywords</option>
      </select>
    </label>
    <label>mode
      <select id="mode">
        <option value="caiaf">caiaf (grouped, with context)</option>
        <option value="plain">plain</option>
      </select>
    </label>
    <label>batches <input id="batches" type="number" value="10" min="1"></label>
    <label>batch size <input id="batch-size" type="number" value="5" min="1"></label>
    <label>seed <input id="seed" type="number" value="0"></label>
    <div class="dataset-note">dataset: ${info.n_records} records,
      classes ${info.classes.join(" / ")}</div>
    <button id="start">start</button>
  `;
  root.appendChild(form);
  const field = (id: string) => form.querySelector<HTMLInputElement>(`#${id}`)!;
  form.querySelector<HTMLButtonElement>("#start")!.addEventListener("click", async () => {
    const sessionId = await api.createSession({
      dimension: field("dimension").value,
      mode: field("mode").value,
      total_batches: Number(field("batches").value),
      batch_size: Number(field("batch-size").value),
      rng_seed: Number(field("seed").value),
    });
    history.replaceState(null, "", `?session=${sessionId}`);
    startApp(root, sessionId);
  });
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const sessionId = new URLSearchParams(location.search).get("session");
  if (sessionId) {
    startApp(root, sessionId);
  } else {
    void showStartForm(root);
  }
}

boot();
