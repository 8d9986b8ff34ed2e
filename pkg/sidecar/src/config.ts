export interface SidecarConfig {
  host: string;
  port: number;
  embeddingModel: string;
  nerModel: string;
  batchSize: number;
  maxTextLength: number;
  maxBodyBytes: number;
}

export const DEFAULTS: SidecarConfig = {
  host: "127.0.0.1",
  port: 8757,
  embeddingModel: "hash-embed-256-v1",
  nerModel: "heuristic-ner-v1",
  batchSize: 32,
  maxTextLength: 20000,
  maxBodyBytes: 2 * 1024 * 1024,
};

export function validate(config: SidecarConfig): SidecarConfig {
  if (!Number.isInteger(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error(`port out of range: ${config.port}`);
  }
  if (!Number.isInteger(config.batchSize) || config.batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${config.batchSize}`);
  }
  if (!Number.isInteger(config.maxTextLength) || config.maxTextLength < 1) {
    throw new Error(`max text length must be >= 1, got ${config.maxTextLength}`);
  }
  if (!Number.isInteger(config.maxBodyBytes) || config.maxBodyBytes < 1) {
    throw new Error(`max body bytes must be >= 1, got ${config.maxBodyBytes}`);
  }
  return config;
}

function intOr(raw: string | undefined, fallback: number, name: string): number {
  if (raw === undefined || raw === "") {
    return fallback;
  }
  const value = Number(raw);
  if (!Number.isInteger(value)) {
    throw new Error(`${name} must be an integer, got ${raw!}`);
  }
  return value;
}

/** Build a config from SIDECAR_* environment variables. */
export function fromEnv(env: NodeJS.ProcessEnv = process.env): SidecarConfig {
  return validate({
    host: env.SIDECAR_HOST || DEFAULTS.host,
    port: intOr(env.SIDECAR_PORT, DEFAULTS.port, "SIDECAR_PORT"),
    embeddingModel: env.SIDECAR_EMBEDDING_MODEL || DEFAULTS.embeddingModel,
    nerModel: env.SIDECAR_NER_MODEL || DEFAULTS.nerModel,
    batchSize: intOr(env.SIDECAR_BATCH_SIZE, DEFAULTS.batchSize, "SIDECAR_BATCH_SIZE"),
    maxTextLength: intOr(
      env.SIDECAR_MAX_TEXT_LENGTH,
      DEFAULTS.maxTextLength,
      "SIDECAR_MAX_TEXT_LENGTH"
    ),
    maxBodyBytes: intOr(
      env.SIDECAR_MAX_BODY_BYTES,
      DEFAULTS.maxBodyBytes,
      "SIDECAR_MAX_BODY_BYTES"
    ),
  });
}

/** Apply --key value / --key=value overrides on top of a base config. */
export function fromArgs(argv: string[], base: SidecarConfig = fromEnv()): SidecarConfig {
  const flags: Record<string, keyof SidecarConfig> = {
    "--host": "host",
    "--port": "port",
    "--embedding-model": "embeddingModel",
    "--ner-model": "nerModel",
    "--batch-size": "batchSize",
    "--max-text-length": "maxTextLength",
    "--max-body-bytes": "maxBodyBytes",
  };
  const config = { ...base };
  for (let i = 0; i < argv.length; i++) {
    let arg = argv[i];
    let value: string | undefined;
    const eq = arg.indexOf("=");
    if (eq !== -1) {
      value = arg.slice(eq + 1);
      arg = arg.slice(0, eq);
    }
    const key = flags[arg];
    if (key === undefined) {
      throw new Error(`unknown flag: ${arg}`);
    }
    if (value === undefined) {
      value = argv[++i];
      if (value === undefined) {
        throw new Error(`flag ${arg} needs a value`);
      }
    }
    if (key === "host" || key === "embeddingModel" || key === "nerModel") {
      config[key] = value;
    } else {
      const parsed = Number(value);
      if (!Number.isInteger(parsed)) {
        throw new Error(`flag ${arg} must be an integer, got ${value}`);
      }
      config[key] = parsed;
    }
  }
  return validate(config);
}
