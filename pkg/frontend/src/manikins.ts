/**
 * Self-assessment manikin icons as inline SVG, nine discrete steps per
 * dimension.  Valence morphs the mouth from frown to smile; activation
 * grows an energy burst around the figure.
 */
export function valenceManikin(level: number): string {
  const t = (level - 1) / 8; // 0 = very negative, 1 = very positive
  const curve = (t - 0.5) * 16;
  return `
<svg viewBox="0 0 40 40" aria-hidden="true">
  <circle cx="20" cy="20" r="14" fill="none" stroke="currentColor" stroke-width="2"/>
  <circle cx="14.5" cy="16" r="1.8" fill="currentColor"/>
  <circle cx="25.5" cy="16" r="1.8" fill="currentColor"/>
  <path d="M 13 ${26 - curve / 2} Q 20 ${26 + curve} 27 ${26 - curve / 2}"
        fill="none" stroke="currentColor" stroke-width="2" stroke-linecap="round"/>
</svg>`;
}

export function activationManikin(level: number): string {
  const t = (level - 1) / 8; // 0 = very calm, 1 = very excited
  const rays: string[] = [];
  const nRays = Math.round(t * 8);
  for (let i = 0; i < nRays; i++) {
    const angle = (i / 8) * 2 * Math.PI - Math.PI / 2;
    const r1 = 16.5;
    const r2 = 16.5 + 3 + 4 * t;
    const x1 = 20 + r1 * Math.cos(angle);
    const y1 = 20 + r1 * Math.sin(angle);
    const x2 = 20 + r2 * Math.cos(angle);
    const y2 = 20 + r2 * Math.sin(angle);
    rays.push(`<line x1="${x1.toFixed(1)}" y1="${y1.toFixed(1)}" x2="${x2.toFixed(1)}" y2="${y2.toFixed(1)}"
        stroke="currentColor" stroke-width="1.6" stroke-linecap="round"/>`);
  }
  const eyeR = 1.4 + 1.6 * t;
  return `
<svg viewBox="0 0 40 40" aria-hidden="true">
  <circle cx="20" cy="20" r="14" fill="none" stroke="currentColor" stroke-width="2"/>
  <circle cx="14.5" cy="16" r="${eyeR.toFixed(1)}" fill="none" stroke="currentColor" stroke-width="1.6"/>
  <circle cx="25.5" cy="16" r="${eyeR.toFixed(1)}" fill="none" stroke="currentColor" stroke-width="1.6"/>
  <ellipse cx="20" cy="26.5" rx="${(2 + 4 * t).toFixed(1)}" ry="${(1 + 3 * t).toFixed(1)}"
           fill="none" stroke="currentColor" stroke-width="1.6"/>
  ${rays.join("\n  ")}
</svg>`;
}
