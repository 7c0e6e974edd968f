// Wire types for the prediction service. Field names and rounding
// follow the service contract exactly; the UI never invents numbers.

export type EndpointName = "late_amd" | "ga" | "nv";

export const ENDPOINTS: readonly EndpointName[] = ["late_amd", "ga", "nv"];

export const ENDPOINT_LABELS: Record<EndpointName, string> = {
  late_amd: "Late AMD",
  ga: "Geographic atrophy",
  nv: "Neovascular AMD",
};

export interface HorizonRisk {
  horizon_years: number;
  probability: number;
  extrapolated: boolean;
}

export interface PredictionResponse {
  predictions: Partial<Record<EndpointName, HorizonRisk[]>>;
  sss: { score: number; five_year_risk: number } | null;
}

export interface ModelInfo {
  feature_mode: string;
  genotype_mode: string;
  covariate_names: string[];
  coefficients: Record<string, number>;
  horizon_limit_years: number;
}

export interface ModelMetadata {
  endpoints: EndpointName[];
  horizons: number[];
  models: Record<string, ModelInfo>;
}

export interface ServiceError {
  error: string;
  field?: string;
  detail?: string;
}

export interface SubjectDocument {
  grades?: {
    left: { drusen: string; pigment: string };
    right: { drusen: string; pigment: string };
  };
  age?: number;
  smoking?: string;
  genotype?: { cfh?: string; arms2?: string; grs?: number };
  horizons?: number[];
  endpoints?: EndpointName[];
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ServiceFailure extends Error {
  constructor(
    message: string,
    readonly field: string | null,
    readonly status: number,
  ) {
    super(message);
  }
}

// Thin client over fetch; injectable so tests can stub the transport.
export class RiskClient {
  constructor(
    private readonly fetchImpl: FetchLike,
    private readonly base = "",
  ) {}

  async predict(doc: SubjectDocument): Promise<PredictionResponse> {
    const res = await this.fetchImpl(`${this.base}/v1/predict`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    const body = (await res.json()) as PredictionResponse & ServiceError;
    if (!res.ok) {
      throw new ServiceFailure(
        body.detail || body.error || `service error ${res.status}`,
        body.field ?? null,
        res.status,
      );
    }
    return body;
  }

  async metadata(): Promise<ModelMetadata> {
    const res = await this.fetchImpl(`${this.base}/v1/model`);
    const body = (await res.json()) as ModelMetadata & ServiceError;
    if (!res.ok) {
      throw new ServiceFailure(
        body.detail || body.error || `service error ${res.status}`,
        body.field ?? null,
        res.status,
      );
    }
    return body;
  }
}
