import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FakeService } from "./fakeService.js";

describe("api client", () => {
  it("unwraps the error envelope", async () => {
    const service = new FakeService();
    const api = new ApiClient("", service.fetch);
    await api.openProject("x");
    await expect(api.grabcutInit("fake-pid", 0, [0, 0, 0, 0])).rejects.toThrowError(ApiError);
    try {
      await api.grabcutInit("fake-pid", 0, [0, 0, 0, 0]);
    } catch (error) {
      const apiError = error as ApiError;
      expect(apiError.status).toBe(422);
      expect(apiError.envelope.code).toBe("DegenerateRect");
    }
  });

  it("sends confirm flags verbatim on destructive calls", async () => {
    const service = new FakeService();
    const api = new ApiClient("", service.fetch);
    await api.deleteForward("fake-pid", [3], 2, false);
    await api.deleteForward("fake-pid", [3], 2, true);
    const bodies = service.calls.map((c) => c.body);
    expect(bodies[0]).toEqual({ ids: [3], from_index: 2, confirm: false });
    expect(bodies[1]).toEqual({ ids: [3], from_index: 2, confirm: true });
  });

  it("builds image urls with modality and preview", () => {
    const api = new ApiClient("http://localhost:8077");
    expect(api.imageUrl("p", 3, "thermal", true)).toBe(
      "http://localhost:8077/projects/p/frames/3/image?modality=thermal&preview=true",
    );
  });

  it("returns the authoritative frame from mutations", async () => {
    const service = new FakeService();
    const api = new ApiClient("", service.fetch);
    const response = await api.createAnnotation("fake-pid", 1, {
      tag: "car",
      geometry: { type: "box", ul_x: 1, ul_y: 1, lr_x: 5, lr_y: 5 },
    });
    expect(response.object.id).toBe(0);
    expect(response.frame.frame_index).toBe(1);
    expect(response.frame.objects).toHaveLength(1);
  });
});
