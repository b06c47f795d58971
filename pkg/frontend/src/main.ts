/** Browser entry point: pick the gateway address and mount the studio. */

import { GatewayClient } from "./api.js";
import { Studio } from "./studio.js";

function gatewayBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("gateway");
  if (fromQuery) return fromQuery;
  return "http://127.0.0.1:8030";
}

const root = document.getElementById("studio");
if (root === null) {
  throw new Error("missing #studio element");
}
Studio.mount(root, new GatewayClient(gatewayBase())).catch((err) => {
  console.error(err);
});
