"""Output writers: VTK snapshots, CSV time series and run manifests."""

from writers.manifest import RunManifest, build_manifest, run_directory, write_manifest
from writers.timeseries import write_snapshot_sidecar, write_snapshot_table, write_timeseries_csv
from writers.vtk import cell_means, write_vtk_fine_snapshot, write_vtk_snapshot
