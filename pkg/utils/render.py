"""
Complex rendering utility using Pillow
"""

from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw

from embedder.complex_core import SimplicialComplex
from embedder.errors import ComplexError

FILL = (198, 219, 239)
EDGE = (33, 113, 181)
VERTEX = (8, 48, 107)


def render_complex(
    X: SimplicialComplex,
    output_file: str,
    size: int = 512,
    margin: int = 24,
    progress_callback=None,
) -> str:
    """
    Draw a complex to a PNG using the first two coordinates

    Args:
        X: Complex with coordinates
        output_file: Output PNG path
        size: Image width and height in pixels
        margin: Border in pixels
        progress_callback: Optional callback function(event_type, data)

    Returns:
        Path to the created image
    """
    if not X.coords:
        raise ComplexError("coordinates required")

    print(f"\n🖼️  Rendering {X.name or 'complex'}...")

    output_path = Path(output_file)
    output_path.parent.mkdir(exist_ok=True, parents=True)

    vertices = sorted(X.coords)
    points = np.zeros((len(vertices), 2))
    for i, v in enumerate(vertices):
        head = X.coords[v][:2]
        points[i, : len(head)] = head
    low, high = points.min(axis=0), points.max(axis=0)
    scale = (size - 2 * margin) / max(float(np.max(high - low)), 1e-12)

    # y grows downward in image space
    pixel = {
        v: (margin + (p[0] - low[0]) * scale, size - margin - (p[1] - low[1]) * scale)
        for v, p in zip(vertices, points)
    }

    image = Image.new("RGB", (size, size), "white")
    draw = ImageDraw.Draw(image)
    # simplices above dimension 2 show through their triangles
    if X.dim >= 2:
        for tri in X.by_dim[2]:
            draw.polygon([pixel[v] for v in tri], fill=FILL)
    if X.dim >= 1:
        for a, b in X.by_dim[1]:
            draw.line([pixel[a], pixel[b]], fill=EDGE, width=2)
    radius = 3
    for v in vertices:
        x, y = pixel[v]
        draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=VERTEX)

    image.save(str(output_path), format="PNG")

    if progress_callback:
        progress_callback("complex_rendered", {"complex": X.name, "file": str(output_path)})

    print(f"✅ Rendered: {output_path} ({size}x{size})")
    return str(output_path)
