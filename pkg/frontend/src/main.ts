// Browser entry point: bind the console to the page against the service
// that served this document.

import { ServiceClient, WebSocketCtor } from "./api.js";
import { Console } from "./app.js";

const root = document.getElementById("console");
if (root === null) throw new Error("missing #console mount point");

// the DOM WebSocket handler signatures are wider than the minimal surface
// the client needs; the cast narrows to that surface
const client = new ServiceClient(
  window.location.origin,
  (url, init) => window.fetch(url, init),
  WebSocket as unknown as WebSocketCtor,
);

new Console(root, client);
