/** Status glyphs distinguished by shape as well as colour, so colour-blind
 * users can still tell working from not working at a glance. */

export const TICK_PATH = "M4 12.5 L9.5 18 L20 6";
export const CROSS_PATH = "M6 6 L18 18 M18 6 L6 18";

function svg(path: string, cls: string, label: string): string {
  return (
    `<svg class="glyph ${cls}" viewBox="0 0 24 24" role="img" aria-label="${label}">` +
    `<path d="${path}" fill="none" stroke="currentColor" stroke-width="3.2" ` +
    `stroke-linecap="round" stroke-linejoin="round"></path></svg>`
  );
}

export function tickGlyph(): string {
  return svg(TICK_PATH, "glyph-tick", "working");
}

export function crossGlyph(): string {
  return svg(CROSS_PATH, "glyph-cross", "not working");
}

export const MODE_ICONS: Record<string, string> = {
  stairs: "↗",     // ↗
  escalator: "⤳",  // ⤳
  lift: "⇕",       // ⇕
  walk: "→",       // →
};
