import "./style.css";
import { ApiClient } from "./api";
import { SessionController } from "./controller";
import { render } from "./view";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const api = new ApiClient();
const controller = new SessionController(api, (state) => render(root, state, controller));
render(root, controller.state, controller);
