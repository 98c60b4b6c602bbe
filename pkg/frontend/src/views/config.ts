/**
 * Side-by-side parameter table for an experiment design: one column per
 * group, one row per lever, declared interventions highlighted.
 */

import type { DesignDoc } from "../types.js";

export interface ConfigCell {
  group: string;
  value: unknown;
  display: string;
}

export interface ConfigRowView {
  lever: string;
  cells: ConfigCell[];
  highlighted: boolean;
  /** every group shows the same value */
  uniform: boolean;
}

export interface ConfigTableView {
  designId: string;
  columns: string[];
  rows: ConfigRowView[];
  highlightedRows: string[];
  horizon: number;
  seeds: number[];
  population: Record<string, number>;
}

export function buildConfigView(design: DesignDoc): ConfigTableView {
  const columns = design.groups.map(([name]) => name);
  const declared = new Set(design.declared_interventions);

  // row order follows the first group's lever map; later groups carry the
  // same keys, but any straggler still gets a row
  const leverNames: string[] = [];
  const seen = new Set<string>();
  for (const [, levers] of design.groups) {
    for (const name of Object.keys(levers)) {
      if (!seen.has(name)) {
        seen.add(name);
        leverNames.push(name);
      }
    }
  }

  const rows = leverNames.map((lever): ConfigRowView => {
    const cells = design.groups.map(([group, levers]): ConfigCell => {
      const value = levers[lever];
      return { group, value, display: formatValue(value) };
    });
    const uniform = cells.every((cell) => sameValue(cell.value, cells[0].value));
    // highlight only declared rows that actually differ; a declared-but-equal
    // row (blocked server-side anyway) degrades to an empty highlight
    return { lever, cells, highlighted: declared.has(lever) && !uniform, uniform };
  });

  return {
    designId: design.design_id,
    columns,
    rows,
    highlightedRows: rows.filter((row) => row.highlighted).map((row) => row.lever),
    horizon: design.horizon,
    seeds: design.seeds,
    population: design.population,
  };
}

function sameValue(a: unknown, b: unknown): boolean {
  return Object.is(a, b) || JSON.stringify(a) === JSON.stringify(b);
}

function formatValue(value: unknown): string {
  if (value === null || value === undefined) return "";
  return String(value); // shown verbatim; no client-side unit conversion
}
