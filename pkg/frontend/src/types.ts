// Wire types for the mptk HTTP service. The UI never computes tracks itself:
// every overlay is rendered from geometry the service returns.

export interface MouseSample {
  x: number;
  y: number;
  pressed: boolean;
}

export interface MouseRecordingFile {
  fps: number;
  samples: MouseSample[];
}

export interface ExpandRequest {
  kind: "mouse" | "sphere" | "camera" | "compose" | "transfer" | "magnify";
  seed?: number;
  n_frames?: number;
  params?: Record<string, unknown>;
  recording?: MouseRecordingFile;
}

export interface ExpandResponse {
  track_id: string;
  n_tracks: number;
  n_frames: number;
}

export interface TrackGeometry {
  track_id: string;
  n_tracks: number;
  n_frames: number;
  width: number;
  height: number;
  /** [track][frame] -> [x, y] */
  positions: number[][][];
  /** [track][frame] -> 0 | 1 */
  visibility: number[][];
}

export interface SessionState {
  session_id: string;
  width: number;
  height: number;
  has_depth: boolean;
  artifacts: string[];
}

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}
