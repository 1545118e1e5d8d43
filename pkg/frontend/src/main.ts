import { initStudio } from "./studio.js";

window.addEventListener("DOMContentLoaded", () => {
  initStudio(document);
});
