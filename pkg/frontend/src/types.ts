/** Wire types for the /v1 prediction API. */

export type AttributeKind = "text" | "number" | "date" | "binary" | "category" | "downloads";

export interface SchemaAttribute {
  name: string;
  kind: AttributeKind;
  values?: string[];
}

export interface ApiSchema {
  variant: "user" | "developer";
  threshold: number;
  attributes: SchemaAttribute[];
}

export interface ImportanceEntry {
  feature: string;
  score: number;
}

export interface PredictResponse {
  score: number;
  label: "Removed" | "Stable";
  threshold: number;
  top_importance: ImportanceEntry[];
  model_version: string;
}

export interface Mutation {
  attribute: string;
  value: unknown;
}

export interface WhatIfResult {
  mutation: Mutation;
  score: number;
  delta: number;
}

export interface WhatIfResponse {
  base_score: number;
  results: WhatIfResult[];
}

export interface HealthResponse {
  status: "ok" | "no_model";
  model_version: string | null;
}

export interface ApiError {
  error: string;
  message: string;
}

/** Form values keyed by attribute name; absent keys are unset. */
export type FormValues = Record<string, string | number>;
