// Frame-accurate mouse recording over the display clock.
//
// The browser delivers cursor events and display frames at whatever rate it
// likes; the model wants exactly nFrames samples at a fixed fps. A fixed
// timestep accumulator closes the gap: on every display tick, push as many
// samples as are due by the wall clock, each holding the latest cursor state,
// so dropped display frames are filled by repeating the last sample.

import type { MouseRecordingFile, MouseSample } from "./types.js";

export const DEFAULT_FPS = 16;
export const DEFAULT_FRAMES = 80;
export const DEFAULT_COUNTDOWN_SECONDS = 3;

export type Phase = "idle" | "countdown" | "recording" | "done" | "invalidated";

export interface RecorderOptions {
  fps?: number;
  nFrames?: number;
  countdownSeconds?: number;
}

export class RecordingSession {
  readonly fps: number;
  readonly nFrames: number;
  readonly countdownSeconds: number;

  private phaseValue: Phase = "idle";
  private samples: MouseSample[] = [];
  private cursor: MouseSample = { x: 0, y: 0, pressed: false };
  private countdownStartMs = 0;
  private recordStartMs = 0;
  private invalidReason = "";

  constructor(options: RecorderOptions = {}) {
    this.fps = options.fps ?? DEFAULT_FPS;
    this.nFrames = options.nFrames ?? DEFAULT_FRAMES;
    this.countdownSeconds = options.countdownSeconds ?? DEFAULT_COUNTDOWN_SECONDS;
    if (this.fps <= 0 || this.nFrames < 1) {
      throw new Error("fps and nFrames must be positive");
    }
  }

  get phase(): Phase {
    return this.phaseValue;
  }

  /** Nominal recording duration in seconds (nFrames / fps; 5 s at defaults). */
  get durationSeconds(): number {
    return this.nFrames / this.fps;
  }

  get sampleCount(): number {
    return this.samples.length;
  }

  get invalidationReason(): string {
    return this.invalidReason;
  }

  setCursor(x: number, y: number, pressed: boolean): void {
    this.cursor = { x, y, pressed };
  }

  /** Arm the pre-roll countdown. Restarting after done/invalidated is fine. */
  start(nowMs: number): void {
    this.samples = [];
    this.invalidReason = "";
    this.countdownStartMs = nowMs;
    this.phaseValue = this.countdownSeconds > 0 ? "countdown" : "recording";
    this.recordStartMs = nowMs + this.countdownSeconds * 1000;
  }

  /** Call once per display frame. Returns the phase after this tick. */
  tick(nowMs: number): Phase {
    if (this.phaseValue === "countdown" && nowMs >= this.recordStartMs) {
      this.phaseValue = "recording";
    }
    if (this.phaseValue === "recording") {
      const step = 1000 / this.fps;
      const due = Math.min(
        this.nFrames,
        Math.floor((nowMs - this.recordStartMs) / step) + 1,
      );
      while (this.samples.length < due) {
        this.samples.push({ ...this.cursor });
      }
      if (this.samples.length >= this.nFrames) {
        this.phaseValue = "done";
      }
    }
    return this.phaseValue;
  }

  /** Losing focus mid-capture voids the recording; the user must retry. */
  invalidate(reason = "window lost focus during recording"): void {
    if (this.phaseValue === "countdown" || this.phaseValue === "recording") {
      this.phaseValue = "invalidated";
      this.invalidReason = reason;
      this.samples = [];
    }
  }

  countdownRemainingSeconds(nowMs: number): number {
    if (this.phaseValue !== "countdown") return 0;
    return Math.max(0, (this.recordStartMs - nowMs) / 1000);
  }

  recordingRemainingSeconds(nowMs: number): number {
    if (this.phaseValue !== "recording") return 0;
    const elapsed = (nowMs - this.recordStartMs) / 1000;
    return Math.max(0, this.durationSeconds - elapsed);
  }

  toRecordingFile(): MouseRecordingFile {
    if (this.phaseValue !== "done") {
      throw new Error(`recording not complete (phase: ${this.phaseValue})`);
    }
    return { fps: this.fps, samples: this.samples.map((s) => ({ ...s })) };
  }
}
