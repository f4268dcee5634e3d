import { mount } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");
mount(root);
