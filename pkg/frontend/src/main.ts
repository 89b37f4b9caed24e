/** Browser entry point: mount the app on the served page. */

import { ApiClient } from "./api.js";
import { mount } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const app = mount(root, new ApiClient());
  void app.render();
}
