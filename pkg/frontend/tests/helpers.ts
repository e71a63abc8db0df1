import { ApiClient } from "../src/api.js";
import { createApp, type App } from "../src/app.js";
import { FakeServer } from "./fakeServer.js";

export async function waitFor(predicate: () => boolean, timeoutMs = 2000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 2));
  }
}

export interface Harness {
  server: FakeServer;
  app: App;
  root: HTMLElement;
  downloads: { filename: string; text: string }[];
}

export function mountApp(): Harness {
  const server = new FakeServer();
  server.install();
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  const downloads: { filename: string; text: string }[] = [];
  const app = createApp(root, new ApiClient(""), {
    pollIntervalMs: 1,
    download: (filename, text) => downloads.push({ filename, text }),
  });
  return { server, app, root, downloads };
}

export async function uploadCsv(harness: Harness, csv: string, filename = "eye.csv"): Promise<void> {
  const file = new File([csv], filename, { type: "text/csv" });
  harness.app.menuActions.uploadCsv(file);
  await waitFor(() => harness.app.store.state.project !== null && !harness.app.store.state.busy);
}

export function sourceRows(root: HTMLElement): HTMLElement[] {
  return [...root.querySelectorAll<HTMLElement>(".source-row")];
}

export function clickRowByName(root: HTMLElement, name: string): void {
  const row = sourceRows(root).find((r) => r.textContent?.includes(name));
  if (!row) throw new Error(`no source row named ${name}`);
  row.click();
}
