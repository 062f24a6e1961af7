// Wire types for the monitoring service; field names match the JSON exactly.

export type PointLabel = "central" | "outlying";

export interface MsPointDto {
  id: string;
  mo: number;
  vo: number;
  label: PointLabel;
  approximate: boolean;
}

export interface Snapshot {
  epoch: number;
  t_count: number;
  points: MsPointDto[];
}

export interface SeriesResponse {
  ids: string[];
  timestamps: number[];
  series: Record<string, number[]>;
  mean: number[];
}

export interface ScreeRow {
  index: number;
  ratio: number;
  cumulative_ratio: number;
}

export interface FpcDto {
  index: number;
  eigenvalue: number;
  values: number[];
}

export interface PerturbationDto {
  times: number[];
  mean: number[];
  plus: number[];
  minus: number[];
}

export interface FpcaResult {
  series_ids: string[];
  times: number[];
  mean_curve: number[];
  eigenvalues: number[];
  explained_ratio: number[];
  scree: ScreeRow[];
  fpcs: FpcDto[];
  scores: Record<string, number[]>;
  perturbations: PerturbationDto[];
  lambda: number;
}

export interface FpcaRequest {
  basis?: string;
  n_basis?: number;
  penalty_order?: number;
  lambda?: number | "gcv";
}

export interface TopkResponse {
  ranking: string[];
  component: number;
  mode: string;
}

export interface LayoutCell {
  id: string;
  row: number;
  col: number;
  series: string[];
  outlier_count: number;
}

export interface LayoutResponse {
  cells: LayoutCell[];
  epoch: number;
}

export interface ServerConfig {
  push_policy: { points_per_update: number; min_interval: number };
  classify: { mo_band: [number, number]; vo_cap: number };
  drift: { threshold: number; bin_count: number; approx_budget: number };
  fpca: { basis: string; n_basis: number; penalty_order: number; lambda: number | "gcv" };
}

export interface RecomputeEvent {
  epoch: number;
  t_count?: number;
  n_series?: number;
}

export interface DegenerateEvent {
  t_index: number;
  degenerate_count: number;
}
