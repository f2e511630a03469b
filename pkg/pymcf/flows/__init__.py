'''
Catalog of explicit ancient mean curvature flows.

Entries are selected by name, optionally transformed (parabolic rescaling, recentring) through
a flow spec, e.g. the JSON document

.. code-block:: json

    {"name": "grim_reaper", "parameters": {"rescale": 2.0, "recenter": [[0.0, 1.0], -1.0]}}
'''

from dataclasses import dataclass, field
import json

import numpy as np

from pymcf.flows.base import (AncientFlow, BallRestriction, Chart, SliceGeometry,  # noqa: F401
                              evaluate_geometry, hausdorff_mass, parabolic_rescale, recenter,
                              restrict_to_ball, well_defined_mass)
from pymcf.flows.shrinkers import Line, Plane, ShrinkingCircle, ShrinkingCylinder, ShrinkingSphere
from pymcf.flows.translators import Bowl, GrimReaper
from pymcf.flows.angenent import AngenentOval


def _sphere(n=1):
    if n == 1:
        return ShrinkingCircle()
    if n == 2:
        return ShrinkingSphere()
    raise ValueError(f'shrinking spheres are available for n = 1, 2, got n = {n}')


FLOW_BUILDERS = {
    'line': lambda: Line(),
    'shifted_line': lambda offset=1.0: Line(offset=offset),
    'plane': lambda: Plane(),
    'shifted_plane': lambda offset=1.0: Plane(offset=offset),
    'circle': ShrinkingCircle,
    'sphere2': ShrinkingSphere,
    'sphere': _sphere,
    'cylinder': ShrinkingCylinder,
    'grim_reaper': GrimReaper,
    'bowl': Bowl,
    'angenent_oval': AngenentOval,
}
'''Constructors by catalog name; keyword arguments are the entry's own parameters'''

CATALOG_NAMES = ('line', 'shifted_line', 'plane', 'shifted_plane', 'circle', 'sphere2',
                 'cylinder', 'grim_reaper', 'bowl', 'angenent_oval')

TRANSFORM_KEYS = ('rescale', 'recenter')


def catalog():
    '''One instance of every catalog flow, in a fixed order'''
    return [FLOW_BUILDERS[name]() for name in CATALOG_NAMES]


@dataclass
class FlowSpec:
    '''A catalog entry with its parameters and transforms

    ``parameters`` holds the entry's own constructor arguments (e.g. ``offset`` for shifted
    planes, ``n`` for spheres, ``rho_max`` for the bowl) plus the transforms ``rescale``
    (a factor r > 0) and ``recenter`` ([x0, t0], moved to the space-time origin).
    '''
    name: str
    parameters: dict = field(default_factory=dict)

    def build(self):
        return get_flow(self.name, **self.parameters)


def get_flow(name, **parameters):
    '''Build the catalog flow ``name``, then apply ``recenter`` and ``rescale`` if given

    Raises:
        ValueError: unknown name or parameters
    '''
    if name not in FLOW_BUILDERS:
        raise ValueError(f'unknown flow {name!r}; available: {sorted(FLOW_BUILDERS)}')
    own = {k: v for k, v in parameters.items() if k not in TRANSFORM_KEYS}
    try:
        flow = FLOW_BUILDERS[name](**own)
    except TypeError as err:
        raise ValueError(f'bad parameters {own} for flow {name!r}: {err}') from err

    if parameters.get('recenter') is not None:
        x0, t0 = parameters['recenter']
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (flow.N,):
            raise ValueError(f'recenter point must lie in R^{flow.N}, got {x0.tolist()}')
        flow = recenter(flow, x0, float(t0))
    if parameters.get('rescale') is not None:
        flow = parabolic_rescale(flow, float(parameters['rescale']))
    return flow


def flow_from_spec(spec):
    '''Build a flow from a flow-spec mapping, a JSON string or a path to a JSON file'''
    if isinstance(spec, str):
        text = spec
        if not spec.lstrip().startswith('{'):
            with open(spec, 'r') as f:
                text = f.read()
        spec = json.loads(text)
    unknown = sorted(set(spec) - {'name', 'parameters'})
    if unknown:
        raise ValueError(f'unknown flow-spec keys: {unknown}')
    if 'name' not in spec:
        raise ValueError('flow spec needs a "name"')
    return FlowSpec(spec['name'], dict(spec.get('parameters') or {})).build()
