/** CLI entry point: node dist/main.js [--port N] [--model NAME] */

import { createApp } from "./server.js";

const SUPPORTED_MODELS = ["en-rule-sm"];

function argValue(flag: string): string | undefined {
  const index = process.argv.indexOf(flag);
  return index >= 0 ? process.argv[index + 1] : undefined;
}

const port = Number(argValue("--port") ?? process.env.PARSE_SERVICE_PORT ?? "8090");
const model = argValue("--model") ?? "en-rule-sm";

if (!SUPPORTED_MODELS.includes(model)) {
  console.error(`unknown model '${model}'; available: ${SUPPORTED_MODELS.join(", ")}`);
  process.exit(1);
}
if (!Number.isInteger(port) || port < 0 || port > 65535) {
  console.error(`invalid port '${argValue("--port")}'`);
  process.exit(1);
}

const app = createApp(model);
app.listen(port, () => {
  console.log(`parse-service model=${model} listening on :${port}`);
});
