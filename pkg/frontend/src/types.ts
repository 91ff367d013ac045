// Wire types mirroring the service JSON schemas.

export interface LinkageFields {
  l2: number;
  l3: number;
  l4: number;
  ee_x: number;
  ee_y: number;
}

export type Point = [number, number];

export interface Candidate {
  linkage: LinkageFields;
  valid: boolean;
  d_r: number | null;
  eta_r: number | null;
  path?: Point[];
  b?: Point[];
  c?: Point[];
  eta_profile?: number[];
  split_indices?: [number, number];
  n_steps?: number;
}

export interface SynthesizeResponse {
  candidates: Candidate[];
  warning?: string;
}

export interface DatasetStats {
  n: number;
  d_edges: number[];
  eta_edges: number[];
  counts: number[][];
  marginal_d: number[];
  marginal_eta: number[];
  min: { d_max: number; eta_min: number };
  max: { d_max: number; eta_min: number };
}

export interface ServiceError {
  error: { code: string; message: string };
}

export interface TargetSelection {
  d_t: number;
  eta_t: number;
  n: number;
  seed: number;
}
