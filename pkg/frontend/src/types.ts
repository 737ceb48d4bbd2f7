// Payload schemas of the explorer service (schema version 1).

export interface ParameterInfo {
  name: string;
  min: number;
  max: number;
}

export interface CurveInfo {
  kind: string;
  file: string;
  alpha?: number;
  distance?: string;
  refPoint?: number[];
}

export interface MetaPayload {
  v: number;
  name: string;
  dims: [number, number, number];
  voxelCount: number;
  runCount: number;
  parameters: ParameterInfo[];
  aux: string[];
  measures: string[];
  activeMeasure: string;
  curve: CurveInfo;
  m: number;
  subsample: { seed: number; count: number };
  axisOrder: string[] | null;
}

export interface PcpAxisInfo {
  name: string;
  mean: number;
  sensitiveFraction: number;
}

export interface PcpPayload {
  v: number;
  measure: string;
  axes: PcpAxisInfo[];
  auxAxes: { name: string; min: number; max: number }[];
  scale: { min: number; max: number };
  polylines: number[][];
  sampleIndices: number[];
  selectedMask?: boolean[];
  selectionId?: string;
}

export interface HorizonSeriesPayload {
  name: string;
  fullBands: number[];
  topFill: number[];
}

export interface SensitivityViewPayload {
  v: number;
  measure: string;
  bandWidth: number;
  positions: number[];
  curveLength: number;
  horizon: HorizonSeriesPayload[];
  lineFields: string[];
  lineValues: number[][];
  drawOrder: string[];
  colorRamp: { band0: string; bands: string };
}

export interface SelectionResponse {
  v: number;
  id: string;
  voxelCount: number;
}

export interface HeatmapPayload {
  v: number;
  param: string;
  paramRange: [number, number];
  bins: [number, number];
  selectionId: string;
  selectionSize: number;
  values: (number | null)[][];
  colorMap: { name: string; rgb: number[][] };
}

export interface MeshPayload {
  v: number;
  selectionId: string;
  triangleCount: number;
  vertices: number[];
  triangles: number[];
}

export type Interval = [number, number];
