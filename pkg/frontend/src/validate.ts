/**
 * Local validation mirroring the runtime's bundle checks, so exports are
 * blocked before they can fail on the other side.
 */

import type { StudioProject } from "./model.js";
import { UNKNOWN_STATE } from "./model.js";

export interface Finding {
  code: string;
  severity: "error" | "warning";
  pointer: string;
  message: string;
}

const MODIFIERS = ["<alt>", "<ctrl>", "<shift>"];

export function canonicalizeChord(chord: string): string {
  const parts = chord
    .split("+")
    .map((p) => p.trim().toLowerCase())
    .filter((p) => p.length > 0);
  const mods = parts.filter((p) => MODIFIERS.includes(p)).sort();
  const keys = parts.filter((p) => !MODIFIERS.includes(p));
  if (keys.length !== 1) {
    throw new Error(`chord ${JSON.stringify(chord)} must contain exactly one non-modifier key`);
  }
  return [...mods, ...keys].join("+");
}

export function validateProject(project: StudioProject): Finding[] {
  const findings: Finding[] = [];
  const error = (code: string, pointer: string, message: string) =>
    findings.push({ code, severity: "error", pointer, message });
  const warn = (code: string, pointer: string, message: string) =>
    findings.push({ code, severity: "warning", pointer, message });

  if (!project.gameId) {
    error("SchemaViolation", "/game.json/game_id", "project needs a game id");
  }
  const { threshold1, threshold2 } = project.change;
  if (!(0 <= threshold1 && threshold1 <= threshold2 && threshold2 <= 1)) {
    error("SchemaViolation", "/game.json/change/threshold1",
      `need 0 <= threshold1 <= threshold2 <= 1, got ${threshold1}, ${threshold2}`);
  }

  const states = new Set<string>([UNKNOWN_STATE]);
  const seenCueIds = new Set<string>();
  project.cues.forEach((cue, i) => {
    const pointer = `/game.json/cues/${i}`;
    if (!cue.eventId) {
      error("SchemaViolation", pointer, "cue requires an event id");
      return;
    }
    if (seenCueIds.has(cue.eventId)) {
      error("SchemaViolation", pointer, `duplicate cue event id ${cue.eventId}`);
    }
    seenCueIds.add(cue.eventId);
    states.add(cue.eventId);
    if (!cue.message.trim()) {
      // the runtime requires the paired message file to be non-empty
      error("SchemaViolation", pointer, `cue ${cue.eventId} has no message text`);
    }
    if (cue.image.length === 0) {
      error("MissingFile", pointer, `cue ${cue.eventId} has no exemplar image`);
    }
  });
  if (project.cues.length === 0) {
    warn("NoCues", "/game.json/cues", "no visual cues defined (general-mode-only bundle)");
  }

  const elementStates = new Set(project.elements.map((e) => e.stateId));
  for (const stateId of elementStates) {
    if (!states.has(stateId)) {
      error("DanglingStateRef", `/maps/${stateId}.json`,
        `element map state ${JSON.stringify(stateId)} matches no cue event id`);
    }
  }
  const seenElements = new Set<string>();
  project.elements.forEach((element, i) => {
    const key = `${element.stateId}|${element.block.join(",")}|${element.content}`;
    if (seenElements.has(key)) {
      error("DuplicateElement", `/maps/${element.stateId}.json/elements/${i}`,
        `duplicate element ${JSON.stringify(element.content)}`);
    }
    seenElements.add(key);
    if (element.interactivity && !element.content) {
      warn("EmptyContent", `/maps/${element.stateId}.json/elements/${i}`,
        "interactive element has no content yet");
    }
  });

  const canonical: { key: string; states: string[]; id: string }[] = [];
  project.hotkeys.forEach((hotkey, i) => {
    const pointer = `/hotkeys.json/${i}`;
    let key: string;
    try {
      key = canonicalizeChord(hotkey.key);
    } catch (exc) {
      error("SchemaViolation", `${pointer}/key`, String(exc));
      return;
    }
    if (["click_block", "describe_region"].includes(hotkey.kind)
        && !hotkey.options?.block) {
      error("SchemaViolation", `${pointer}/options/block`,
        `kind ${hotkey.kind} requires options.block`);
    }
    for (const state of hotkey.activeStates ?? []) {
      if (!states.has(state)) {
        error("DanglingStateRef", `${pointer}/active_states`,
          `hotkey ${hotkey.id} references undeclared state ${JSON.stringify(state)}`);
      }
    }
    for (const other of canonical) {
      if (other.key !== key) continue;
      const a = hotkey.activeStates ?? [];
      const b = other.states;
      const overlap = a.length === 0 || b.length === 0 || a.some((s) => b.includes(s));
      if (overlap) {
        error("AmbiguousBinding", pointer,
          `hotkeys ${other.id} and ${hotkey.id} share chord ${key} in overlapping states`);
      }
    }
    canonical.push({ key, states: hotkey.activeStates ?? [], id: hotkey.id });
  });

  return findings;
}

export function errorsOf(findings: Finding[]): Finding[] {
  return findings.filter((f) => f.severity === "error");
}
