/**
 * Frame-sequence playback shared by every clip on screen.
 *
 * One player instance drives all players of a task, so A and B always
 * show the same frame index; that is the whole point of serving image
 * sequences instead of encoded video.
 */

export class FramePlayer {
  private index = 0;
  private playing = false;
  private fractional = 0;

  constructor(
    readonly frameCount: number,
    readonly fps: number = 10,
  ) {
    if (!Number.isInteger(frameCount) || frameCount < 1) {
      throw new RangeError(`frameCount must be a positive integer, got ${frameCount}`);
    }
    if (!(fps > 0)) {
      throw new RangeError(`fps must be positive, got ${fps}`);
    }
  }

  get currentFrame(): number {
    return this.index;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  toggle(): void {
    this.playing = !this.playing;
  }

  /** Jump to a frame; out-of-range targets clamp to the valid span. */
  scrubTo(frame: number): void {
    this.index = Math.min(this.frameCount - 1, Math.max(0, Math.floor(frame)));
    this.fractional = 0;
  }

  /** Advance playback by a wall-clock delta; loops at the end. */
  advance(deltaMs: number): void {
    if (!this.playing || deltaMs <= 0) return;
    this.fractional += (deltaMs / 1000) * this.fps;
    const whole = Math.floor(this.fractional);
    if (whole > 0) {
      this.index = (this.index + whole) % this.frameCount;
      this.fractional -= whole;
    }
  }
}

/** Frames both clips can show: playback is clamped to the shorter clip. */
export function sharedFrameCount(counts: number[]): number {
  if (counts.length === 0) return 0;
  return Math.min(...counts);
}
