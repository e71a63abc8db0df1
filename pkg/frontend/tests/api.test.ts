import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";
import { FakeServer, eyeDictionaryCsv } from "./fakeServer.js";

let server: FakeServer;
let api: ApiClient;

beforeEach(() => {
  server = new FakeServer();
  server.install();
  api = new ApiClient("");
});

async function makeProject() {
  const file = new File([eyeDictionaryCsv(5)], "eye.csv", { type: "text/csv" });
  return api.createProject(file, "eye", { rerank: "on" });
}

describe("ApiClient", () => {
  it("creates a project from a multipart upload", async () => {
    const summary = await makeProject();
    expect(summary.project_id).toBe("p1");
    expect(summary.element_count).toBe(5);
    expect(server.requests[0]).toMatchObject({ method: "POST", path: "/api/projects" });
  });

  it("passes paging, filter, and sort as query parameters", async () => {
    const { project_id } = await makeProject();
    await api.listElements(project_id, { status: "unmapped", page: 2, pageSize: 10, sort: "-name" });
    const request = server.requests.at(-1)!;
    expect(request.path).toBe(`/api/projects/${project_id}/elements`);
  });

  it("computes candidates and records decisions through documented routes", async () => {
    const { project_id } = await makeProject();
    const list = await api.computeCandidates(project_id, "e0001");
    expect(list.candidates[0].rank).toBe(1);
    const result = await api.recordDecision(project_id, "e0001", {
      selected_tiny_id: list.candidates[0].tiny_id,
      origin: "auto_top1",
    });
    expect(result.status).toBe("mapped");
  });

  it("surfaces structured errors as ApiRequestError", async () => {
    await expect(api.listElements("nope")).rejects.toSatisfy((error: unknown) => {
      return error instanceof ApiRequestError && error.status === 404 && error.code === "store_error";
    });
  });

  it("downloads the export as text", async () => {
    const { project_id } = await makeProject();
    const text = await api.exportCsv(project_id);
    expect(text.split("\n")[0]).toContain("source_name");
  });
});
