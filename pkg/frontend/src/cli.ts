import { writeFileSync } from "fs";
import yargs from "yargs";
import { renderDdmc } from "./plotDdmc";
import { renderRatio } from "./plotRatio";
import { renderRegret } from "./plotRegret";

function write(out: string, svg: string): void {
  writeFileSync(out, svg + "\n");
  console.log(out);
}

export async function main(argv: string[]): Promise<void> {
  await yargs(argv)
    .scriptName("tokbandit-plots")
    .command(
      "plot-regret",
      "cumulative regret curves with min-max bands from run CSVs",
      (y) =>
        y
          .option("in", { type: "string", demandOption: true, describe: "CSV glob" })
          .option("out", { type: "string", demandOption: true, describe: "output SVG" })
          .option("scale-bound", {
            type: "number",
            default: 1.0,
            describe: "multiplier applied to the bound series",
          }),
      (args) => {
        write(args.out, renderRegret({ pattern: args.in, scaleBound: args["scale-bound"] }));
      },
    )
    .command(
      "plot-ratio",
      "running bound-to-regret ratio from run CSVs",
      (y) =>
        y
          .option("in", { type: "string", demandOption: true, describe: "CSV glob" })
          .option("out", { type: "string", demandOption: true, describe: "output SVG" })
          .option("ref-line", {
            type: "number",
            default: 1.25,
            describe: "horizontal reference level",
          }),
      (args) => {
        write(args.out, renderRatio({ pattern: args.in, refLine: args["ref-line"] }));
      },
    )
    .command(
      "plot-ddmc",
      "per-bucket distance bars with monotonicity score from a stats CSV",
      (y) =>
        y
          .option("in", { type: "string", demandOption: true, describe: "stats CSV path" })
          .option("out", { type: "string", demandOption: true, describe: "output SVG" }),
      (args) => {
        write(args.out, renderDdmc({ path: args.in }));
      },
    )
    .demandCommand(1, "pick a command: plot-regret, plot-ratio, or plot-ddmc")
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? (err ? err.message : "unknown error"));
      process.exit(1);
    })
    .parseAsync();
}

if (require.main === module) {
  main(process.argv.slice(2)).catch((err) => {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  });
}
