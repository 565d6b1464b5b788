// Shell cross-section math for the 2-D view: the silhouette of one strip
// is a circular arc through the two attachment points and the equator
// bulge point. Symmetric about the equator, so the arc's center sits on
// the mid-plane.

export interface CrossSection {
  /** arc center x (mm, axis at x=0) or null for the undeformed straight strip */
  centerX: number | null;
  radius: number;
  /** half-angle subtended from the center to the attachment points (rad) */
  halfAngle: number;
}

export function crossSection(
  heightMm: number,
  bulgeMm: number,
  attachRadiusMm: number,
): CrossSection {
  const h = heightMm;
  const ra = attachRadiusMm;
  const b = bulgeMm;
  if (b <= ra + 1e-9) {
    return { centerX: null, radius: 0, halfAngle: 0 };
  }
  // circle through (ra, h/2), (b, 0), (ra, -h/2); center on y = 0
  const cx = (b * b - ra * ra - (h * h) / 4) / (2 * (b - ra));
  const radius = b - cx;
  const halfAngle = Math.atan2(h / 2, ra - cx);
  return { centerX: cx, radius, halfAngle };
}

/** Sampled right-hand silhouette from the top attach point to the bottom. */
export function silhouette(
  heightMm: number,
  bulgeMm: number,
  attachRadiusMm: number,
  steps = 32,
): Array<[number, number]> {
  const section = crossSection(heightMm, bulgeMm, attachRadiusMm);
  if (section.centerX === null) {
    return [
      [attachRadiusMm, heightMm / 2],
      [attachRadiusMm, -heightMm / 2],
    ];
  }
  const points: Array<[number, number]> = [];
  for (let i = 0; i <= steps; i++) {
    const a = section.halfAngle - (2 * section.halfAngle * i) / steps;
    points.push([
      section.centerX + section.radius * Math.cos(a),
      section.radius * Math.sin(a),
    ]);
  }
  return points;
}
