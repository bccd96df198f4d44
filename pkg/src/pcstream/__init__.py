"""Layered point-cloud streaming over a named-data forwarding plane.

The package has three layers:

* codec / layering / naming / wire: octree coding of point-cloud frames,
  retention-ladder partitioning of the leaf layer, hierarchical content
  names, and chunking into fixed-size packets.
* netsim / forwarding / endpoints / dash: a deterministic discrete-event
  simulator with caching forwarders, a producer/consumer pair speaking
  Interest/Data, and a CDN + reliable-stream baseline for comparison.
* scenario / metrics / sweep / cli: scenario configs, per-run metrics,
  the bandwidth x loss sweep grid, and the command line entry points.
"""

__version__ = "0.1.0"
