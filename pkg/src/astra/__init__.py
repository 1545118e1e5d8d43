"""Game-agnostic accessibility runtime for 2D non-twitch games.

Three agents over a frame stream: Detect (cues, templates, OCR, debounced
events), Describe (change-routed narration with a description cache and a
prioritized speech queue), and Act (grid navigation, hover exploration,
context-gated hotkeys) -- all driven by no-code config bundles.
"""

__version__ = "0.1.0"
