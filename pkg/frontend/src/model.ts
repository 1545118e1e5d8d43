import type { Block } from "./blocks.js";

export interface DraftElement {
  stateId: string;
  block: Block;
  content: string;
  interactivity: boolean;
}

export interface DraftCue {
  eventId: string;
  region: Block;
  message: string;
  severity: "critical" | "normal";
  /** PNG bytes of the region exemplar, cropped from the screenshot. */
  image: Uint8Array;
}

export interface HotkeyOptions {
  block?: Block;
  prompt?: string;
  label?: string;
}

export interface DraftHotkey {
  key: string;
  id: string;
  kind:
    | "describe_region"
    | "click_block"
    | "state_query"
    | "replay_last"
    | "pause_resume";
  options?: HotkeyOptions;
  activeStates?: string[];
}

export interface Screenshot {
  stateId: string;
  width: number;
  height: number;
}

export interface ChangeSettings {
  enabled: boolean;
  threshold1: number;
  threshold2: number;
  blocks: Block[];
}

export interface StudioProject {
  gameId: string;
  defaultLanguage: string;
  screenshots: Screenshot[];
  elements: DraftElement[];
  cues: DraftCue[];
  hotkeys: DraftHotkey[];
  labels: Record<string, Record<string, string>>;
  prompts: Record<string, string>;
  change: ChangeSettings;
}

export function emptyProject(gameId = "untitled"): StudioProject {
  return {
    gameId,
    defaultLanguage: "en",
    screenshots: [],
    elements: [],
    cues: [],
    hotkeys: [],
    labels: {},
    prompts: {},
    change: { enabled: true, threshold1: 0.3, threshold2: 0.7, blocks: [] },
  };
}

/** The reserved state that needs no declared cue. */
export const UNKNOWN_STATE = "unknown";
