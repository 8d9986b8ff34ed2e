import { fromArgs, fromEnv } from "./config.js";
import { SidecarService } from "./server.js";

async function main(): Promise<void> {
  const config = fromArgs(process.argv.slice(2), fromEnv());
  const service = new SidecarService(config);
  const address = await service.listen();
  console.log(`sidecar listening on http://${address.address}:${address.port}`);
  const shutdown = () => {
    void service.close().then(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : err);
  process.exit(1);
});
