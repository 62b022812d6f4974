import * as fs from "fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { PlotKind, render } from "./render";
import { SchemaError } from "./schema";

export function main(argv: string[]): number {
  const args = yargs(argv)
    .command("$0 <kind>", "render a figure from kineticlab artifacts", (y) =>
      y
        .positional("kind", {
          choices: ["rate", "profile", "residual", "energy"] as const,
          demandOption: true,
        })
        .option("in", { type: "string", array: true, demandOption: true })
        .option("out", { type: "string", demandOption: true }),
    )
    .strict()
    .exitProcess(false)
    .parseSync();

  try {
    const svg = render(args.kind as PlotKind, args.in as string[]);
    fs.writeFileSync(args.out as string, svg);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      process.stderr.write(`schema error: ${e.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(hideBin(process.argv)));
}
