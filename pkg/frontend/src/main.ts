/**
 * Bootstrap: configuration comes from URL query parameters.
 *
 *   index.html?service=http://127.0.0.1:8400&annotator=w123&criterion=quality
 */

import { AnnotationApi, Criterion } from './api.js';
import { AnnotationSession } from './session.js';
import { AnnotationApp } from './view.js';

function config(): { service: string; annotator: string; criterion: Criterion } {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get('annotator') ?? '';
  const criterion = params.get('criterion') === 'quality' ? 'quality' : 'coherency';
  return {
    service: params.get('service') ?? 'http://127.0.0.1:8400',
    annotator,
    criterion,
  };
}

export function bootstrap(root: HTMLElement): AnnotationApp {
  const { service, annotator, criterion } = config();
  if (!annotator) {
    root.innerHTML =
      '<p class="banner">Missing ?annotator=&lt;id&gt; in the URL. ' +
      'Add your annotator id and reload.</p>';
    throw new Error('annotator id is required');
  }
  const session = new AnnotationSession(new AnnotationApi(service), annotator, criterion);
  const app = new AnnotationApp(root, session);
  void app.start();
  return app;
}

const rootElement = document.getElementById('app');
if (rootElement !== null) {
  bootstrap(rootElement);
}
