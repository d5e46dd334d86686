"""Small fleets with hand-checkable numbers."""

from aoi_mec.model import DeviceProfile, Environment


def desk_device(ident=0, *, server_distance=25.0, event_distance=10.0, local_cpu_freq=1e9,
                **kw):
    base = dict(id=ident, event_distance=event_distance, unit_sense_time=0.2, data_size=4e6,
                cpu_cycles=1e9, sense_energy_per_bit=1e-9, tx_power=0.1,
                local_cpu_freq=local_cpu_freq, server_distance=server_distance)
    base.update(kw)
    return DeviceProfile(**base)


def desk_env(**kw):
    return Environment(**kw)
