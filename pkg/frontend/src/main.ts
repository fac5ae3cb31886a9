/** DOM bootstrap: wires toolbar, canvas layers, and the session controller. */

import { ApiError, GeosegClient, type ConfigOverrides } from './api.js';
import { LayeredView, decodeMaskPng } from './canvas.js';
import { SessionController } from './controller.js';
import type { Tool } from './state.js';

const SERVICE_URL =
  new URLSearchParams(location.search).get('service') ?? 'http://localhost:8000';

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function toast(message: string): void {
  const el = byId<HTMLDivElement>('toast');
  el.textContent = message;
  el.classList.add('visible');
  setTimeout(() => el.classList.remove('visible'), 4000);
}

async function refreshOverlay(
  controller: SessionController,
  view: LayeredView,
): Promise<void> {
  if (!controller.state.lastMaskPng) return;
  const mask = await decodeMaskPng(controller.state.lastMaskPng);
  view.showMask(mask, controller.state.overlayOpacity);
}

function readConfigPanel(): ConfigOverrides {
  const value = (id: string): number | undefined => {
    const raw = byId<HTMLInputElement>(id).value.trim();
    return raw === '' ? undefined : Number(raw);
  };
  return {
    lambda: value('cfg-lambda'),
    theta: value('cfg-theta'),
    superpixels: value('cfg-superpixels'),
    sigma_xy: value('cfg-sigma-xy'),
    sigma_l: value('cfg-sigma-l'),
    sigma_uv: value('cfg-sigma-uv'),
  };
}

function showStats(controller: SessionController): void {
  const stats = controller.state.lastStats;
  const counts = controller.state.seedCounts;
  byId<HTMLDivElement>('stats').textContent = stats
    ? `${stats.outer_iters} iterations, ${stats.wall_ms.toFixed(0)} ms, ` +
      `K=${stats.K}, ${stats.vertex_count} vertices | ` +
      `seeds fg=${counts.fg} bg=${counts.bg}`
    : `seeds fg=${counts.fg} bg=${counts.bg}`;
}

function main(): void {
  const client = new GeosegClient(SERVICE_URL);
  const controller = new SessionController(client);
  const view = new LayeredView(
    byId<HTMLCanvasElement>('layer-image'),
    byId<HTMLCanvasElement>('layer-overlay'),
    byId<HTMLCanvasElement>('layer-scribbles'),
  );

  const fileInput = byId<HTMLInputElement>('file-input');
  fileInput.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      await controller.openImage(file);
      await view.showImage(file);
      showStats(controller);
    } catch (err) {
      toast(err instanceof ApiError ? err.message : `upload failed: ${err}`);
    }
  });

  for (const tool of ['fg', 'bg', 'erase', 'pan'] as Tool[]) {
    byId<HTMLButtonElement>(`tool-${tool}`).addEventListener('click', () => {
      controller.setTool(tool);
      document
        .querySelectorAll('.tool')
        .forEach((b) => b.classList.toggle('active', b.id === `tool-${tool}`));
    });
  }

  const brush = byId<HTMLInputElement>('brush-radius');
  brush.addEventListener('input', () =>
    controller.setBrushRadius(Number(brush.value)),
  );

  const opacity = byId<HTMLInputElement>('overlay-opacity');
  opacity.addEventListener('input', async () => {
    controller.setOverlayOpacity(Number(opacity.value) / 100);
    await refreshOverlay(controller, view); // local re-render only
  });

  const scribbles = byId<HTMLCanvasElement>('layer-scribbles');
  let lastPoint: [number, number] | null = null;
  const canvasPoint = (ev: PointerEvent): [number, number] => {
    const rect = scribbles.getBoundingClientRect();
    return [
      ((ev.clientX - rect.left) / rect.width) * scribbles.width,
      ((ev.clientY - rect.top) / rect.height) * scribbles.height,
    ];
  };
  scribbles.addEventListener('pointerdown', (ev) => {
    if (controller.state.tool === 'pan') return;
    scribbles.setPointerCapture(ev.pointerId);
    const [x, y] = canvasPoint(ev);
    controller.beginStroke(x, y);
    lastPoint = [x, y];
    view.drawStrokeSegment(
      controller.state.tool as Exclude<Tool, 'pan'>,
      controller.state.brushRadius, x, y, x, y,
    );
  });
  scribbles.addEventListener('pointermove', (ev) => {
    if (lastPoint === null) return;
    const [x, y] = canvasPoint(ev);
    controller.extendStroke(x, y);
    view.drawStrokeSegment(
      controller.state.tool as Exclude<Tool, 'pan'>,
      controller.state.brushRadius,
      lastPoint[0], lastPoint[1], x, y,
    );
    lastPoint = [x, y];
  });
  scribbles.addEventListener('pointerup', async () => {
    lastPoint = null;
    try {
      await controller.endStroke();
      showStats(controller);
    } catch (err) {
      toast(
        err instanceof ApiError
          ? `stroke not saved (${err.message}); it will retry with the next action`
          : `stroke not saved: ${err}`,
      );
    }
  });

  const runButton = byId<HTMLButtonElement>('run');
  runButton.addEventListener('click', async () => {
    if (controller.busy) return;
    controller.setConfig(readConfigPanel());
    runButton.disabled = true;
    try {
      await controller.runSegmentation();
      await refreshOverlay(controller, view);
      showStats(controller);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        toast('need both foreground and background scribbles');
      } else {
        toast(`segmentation failed: ${err}`);
      }
    } finally {
      runButton.disabled = false;
    }
  });

  byId<HTMLButtonElement>('clear-overlay').addEventListener('click', () => {
    view.clearOverlay();
  });
}

main();
