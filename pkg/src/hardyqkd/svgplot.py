"""Minimal static SVG line plots (no plotting dependencies).

Output is deterministic: fixed canvas geometry, fixed float formatting,
one `<polyline>` element per curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 24, 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class LinePlot:
    title: str
    x_label: str
    y_label: str
    curves: list[tuple[str, list[float], list[float]]] = field(default_factory=list)

    def add_curve(self, label: str, xs: list[float], ys: list[float]) -> None:
        if len(xs) != len(ys):
            raise ValueError("x and y must have equal length")
        self.curves.append((label, list(map(float, xs)), list(map(float, ys))))

    def _ranges(self) -> tuple[float, float, float, float]:
        xs = [v for _, x, _ in self.curves for v in x]
        ys = [v for _, _, y in self.curves for v in y]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 - x0 <= 0:
            x1 = x0 + 1.0
        if y1 - y0 <= 0:
            y1 = y0 + 1.0
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def to_svg(self) -> str:
        if not self.curves:
            raise ValueError("no curves to plot")
        x0, x1, y0, y1 = self._ranges()
        pw = _WIDTH - _MARGIN_L - _MARGIN_R
        ph = _HEIGHT - _MARGIN_T - _MARGIN_B

        def sx(x: float) -> float:
            return _MARGIN_L + pw * (x - x0) / (x1 - x0)

        def sy(y: float) -> float:
            return _MARGIN_T + ph * (1.0 - (y - y0) / (y1 - y0))

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
            f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2:.1f}" y="16" text-anchor="middle" '
            f'font-size="14">{self.title}</text>',
        ]
        ax_y = _MARGIN_T + ph
        parts.append(f'<line x1="{_MARGIN_L}" y1="{ax_y}" x2="{_MARGIN_L + pw}" '
                     f'y2="{ax_y}" stroke="black"/>')
        parts.append(f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
                     f'y2="{ax_y}" stroke="black"/>')
        for k in range(5):
            fx = x0 + (x1 - x0) * k / 4
            fy = y0 + (y1 - y0) * k / 4
            parts.append(f'<text x="{sx(fx):.1f}" y="{ax_y + 16}" '
                         f'text-anchor="middle" font-size="11">{fx:.3g}</text>')
            parts.append(f'<text x="{_MARGIN_L - 6}" y="{sy(fy) + 4:.1f}" '
                         f'text-anchor="end" font-size="11">{fy:.3g}</text>')
        parts.append(f'<text x="{_MARGIN_L + pw / 2:.1f}" y="{_HEIGHT - 10}" '
                     f'text-anchor="middle" font-size="12">{self.x_label}</text>')
        parts.append(f'<text x="14" y="{_MARGIN_T + ph / 2:.1f}" font-size="12" '
                     f'text-anchor="middle" transform="rotate(-90 14 '
                     f'{_MARGIN_T + ph / 2:.1f})">{self.y_label}</text>')

        for k, (label, xs, ys) in enumerate(self.curves):
            color = _COLORS[k % len(_COLORS)]
            pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
            parts.append(f'<polyline fill="none" stroke="{color}" '
                         f'stroke-width="1.5" points="{pts}"/>')
            ly = _MARGIN_T + 14 + 16 * k
            lx = _MARGIN_L + pw - 150
            parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                         f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
            parts.append(f'<text x="{lx + 28}" y="{ly}" '
                         f'font-size="11">{label}</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
