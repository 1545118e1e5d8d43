/**
 * Turns a studio project into the runtime's bundle files. Deterministic:
 * identical project state yields byte-identical output.
 */

import type { StudioProject } from "./model.js";
import { canonicalizeChord, errorsOf, validateProject, type Finding } from "./validate.js";

export class ExportBlocked extends Error {
  constructor(public findings: Finding[]) {
    super(`export blocked by ${findings.length} finding(s): `
      + findings.map((f) => `${f.code} at ${f.pointer}`).join("; "));
  }
}

export type BundleFiles = Map<string, Uint8Array | string>;

function sortedRecord<T>(record: Record<string, T>): Record<string, T> {
  return Object.fromEntries(
    Object.entries(record).sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0)),
  );
}

export function exportBundle(project: StudioProject): BundleFiles {
  const findings = validateProject(project);
  const errors = errorsOf(findings);
  if (errors.length > 0) {
    throw new ExportBlocked(errors);
  }

  const files: BundleFiles = new Map();
  const cues = [...project.cues].sort((a, b) =>
    a.eventId < b.eventId ? -1 : a.eventId > b.eventId ? 1 : 0);

  const manifest = {
    game_id: project.gameId,
    default_language: project.defaultLanguage,
    change: {
      enabled: project.change.enabled,
      threshold1: project.change.threshold1,
      threshold2: project.change.threshold2,
      blocks: project.change.blocks,
    },
    cues: cues.map((cue) => ({
      event_id: cue.eventId,
      region: cue.region,
      severity: cue.severity,
    })),
  };
  files.set("game.json", JSON.stringify(manifest, null, 2));

  for (const cue of cues) {
    files.set(`cues/${cue.eventId}.png`, cue.image);
    files.set(`cues/${cue.eventId}.txt`, cue.message);
  }

  const states = [...new Set(project.elements.map((e) => e.stateId))].sort();
  for (const stateId of states) {
    const elements = project.elements
      .filter((e) => e.stateId === stateId)
      .map((e) => ({
        block: e.block,
        content: e.content,
        interactivity: e.interactivity,
        provenance: "manual",
      }));
    files.set(
      `maps/${stateId}.json`,
      JSON.stringify({ state_id: stateId, elements }, null, 2),
    );
  }

  if (project.hotkeys.length > 0) {
    const hotkeys = project.hotkeys.map((h) => {
      const entry: Record<string, unknown> = {
        key: canonicalizeChord(h.key),
        id: h.id,
        kind: h.kind,
      };
      if (h.options && Object.keys(h.options).length > 0) {
        const options: Record<string, unknown> = {};
        if (h.options.block) options.block = h.options.block;
        if (h.options.prompt) options.prompt = h.options.prompt;
        if (h.options.label) options.label = h.options.label;
        entry.options = options;
      }
      if (h.activeStates && h.activeStates.length > 0) {
        entry.active_states = [...h.activeStates].sort();
      }
      return entry;
    });
    files.set("hotkeys.json", JSON.stringify(hotkeys, null, 2));
  }

  for (const [tag, table] of Object.entries(sortedRecord(project.labels))) {
    files.set(`labels/label_${tag}.json`,
      JSON.stringify(sortedRecord(table), null, 2));
  }
  for (const [key, text] of Object.entries(sortedRecord(project.prompts))) {
    files.set(`prompts/${key}.txt`, text);
  }

  files.set("profile_blind.json", JSON.stringify({
    mode: "blind", input: "keyboard", verbosity: "brief",
    ocr_hover_enabled: false,
  }, null, 2));
  files.set("profile_low_vision.json", JSON.stringify({
    mode: "low_vision", input: "mouse+keyboard", verbosity: "rich",
    ocr_hover_enabled: true,
  }, null, 2));

  return files;
}
