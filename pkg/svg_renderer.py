"""
Layered SVG figures of a planning run

Layers, bottom to top: coverage (access point circles and hole cells),
obstacles, corridor, continuous (unconstrained path), final (constrained
paths) and visited (expansion trace). Element order is fully determined by
the inputs so that output is byte-stable.
"""

import logging

import numpy as np
from lxml import etree

from config import RENDER_THEME, SVG_LAYERS

logger = logging.getLogger(__name__)

SVG_NS = 'http://www.w3.org/2000/svg'
CONTINUOUS_PLANNERS = ('theta', 'astar')


def _fmt(value):
    text = f"{float(value):.3f}".rstrip('0').rstrip('.')
    return '0' if text == '-0' else text


def _row_runs(mask):
    """(x, y, length) runs of True cells, row by row"""
    for y, row in enumerate(np.asarray(mask, dtype=bool)):
        padded = np.concatenate(([False], row, [False])).astype(np.int8)
        edges = np.flatnonzero(np.diff(padded))
        for start, stop in zip(edges[::2], edges[1::2]):
            yield int(start), y, int(stop - start)


def _rect(parent, x, y, w, h, px, **attrs):
    return etree.SubElement(parent, 'rect', x=_fmt(x * px), y=_fmt(y * px), width=_fmt(w * px),
                            height=_fmt(h * px), **attrs)


def _points(path, px):
    return ' '.join(f"{_fmt(x * px)},{_fmt(y * px)}" for x, y in path)


def _unwrap(item):
    """PlannedPath/NoPath from a ResultRecord or the path itself"""
    return getattr(item, 'result', item)


def render_svg(world, holes=(), results=()):
    """SVG document (str) for a world, its holes and planner results"""
    theme = RENDER_THEME
    px = theme['cell_px']
    width, height = world.width * px, world.height * px

    root = etree.Element('svg', nsmap={None: SVG_NS}, version='1.1', width=str(width), height=str(height),
                         viewBox=f"0 0 {width} {height}")
    etree.SubElement(root, 'rect', id='frame', x='0', y='0', width=str(width), height=str(height),
                     fill=theme['background'], stroke=theme['frame'])
    layers = {name: etree.SubElement(root, 'g', id=name) for name in SVG_LAYERS}

    scale = px / world.cell_size_m
    coverage = layers['coverage']
    for ap in world.access_points:
        etree.SubElement(coverage, 'circle', cx=_fmt(ap.center[0] * scale), cy=_fmt(ap.center[1] * scale),
                         r=_fmt(ap.radius_m * scale), fill=theme['coverage'],
                         **{'fill-opacity': theme['coverage_opacity']})
    for hole in sorted(holes, key=lambda h: h.id):
        mask = np.zeros((world.height, world.width), dtype=bool)
        for x, y in hole.cells:
            mask[y, x] = True
        for x, y, run in _row_runs(mask):
            _rect(coverage, x, y, run, 1, px, fill='none', stroke=theme['coverage'],
                  **{'stroke-dasharray': '2,2', 'class': f"hole-{hole.id}"})

    for x, y, run in _row_runs(world.blocked):
        _rect(layers['obstacles'], x, y, run, 1, px, fill=theme['obstacles'])

    if world.polyline:
        corridor = world.corridor
        inside = corridor[:-1, :-1] & corridor[:-1, 1:] & corridor[1:, :-1] & corridor[1:, 1:]
        for x, y, run in _row_runs(inside):
            _rect(layers['corridor'], x, y, run, 1, px, fill=theme['corridor'],
                  **{'fill-opacity': theme['corridor_opacity']})
        etree.SubElement(layers['corridor'], 'polyline', points=_points(world.polyline, px), fill='none',
                         stroke=theme['corridor'], **{'stroke-width': theme['stroke_width']})

    seen = set()
    for item in results:
        path = _unwrap(item)
        if not path.found:
            continue
        planner = getattr(item, 'planner', '') or path.planner
        layer = 'continuous' if planner in CONTINUOUS_PLANNERS else 'final'
        etree.SubElement(layers[layer], 'polyline', points=_points(path.turning_points, px), fill='none',
                         stroke=theme[layer], **{'stroke-width': theme['stroke_width'],
                                                 'class': planner or layer})
        if layer == 'final':
            for x, y in path.visited_trace:
                if (x, y) in seen:
                    continue
                seen.add((x, y))
                etree.SubElement(layers['visited'], 'circle', cx=_fmt(x * px), cy=_fmt(y * px),
                                 r=theme['visited_radius'], fill=theme['visited'])

    logger.debug(f"Rendered SVG with {len(root.findall('.//{%s}*' % SVG_NS))} elements")
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding='UTF-8').decode('utf-8')


def write_svg(document, path):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(document)
    return path
